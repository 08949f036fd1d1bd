use std::path::PathBuf;

use tinysv::asv::EnrollmentSet;
use tinysv::dsp::SampleStream;
use tinysv::pipeline::{Command, Mode, Pipeline};

use crate::messages::{decode_pcm, ClientMessage, ErrorCode, MemorySummary, ServerMessage, Status};
use crate::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(pub u64);

/// The pipeline plus session bookkeeping. Not thread-safe by design: the
/// server gives it a thread of its own and feeds it one message at a time,
/// so commands always land between windows.
pub struct Demo {
    pipeline: Pipeline,
    stream: SampleStream,
    producer: Option<SessionId>,
    next_session: u64,
    /// Enrollment state restored on every session open.
    persisted: Option<EnrollmentSet>,
    enrollment_file: Option<PathBuf>,
}

impl Demo {
    pub fn new(pipeline: Pipeline) -> Result<Self, ServiceError> {
        let stream = SampleStream::new(&pipeline.config().stream)?;
        Ok(Self {
            pipeline,
            stream,
            producer: None,
            next_session: 1,
            persisted: None,
            enrollment_file: None,
        })
    }

    /// Persists completed enrollments to `path`, loading it now if present.
    pub fn with_enrollment_file(mut self, path: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let path = path.into();
        if path.exists() {
            let set = EnrollmentSet::load(&path)?;
            self.pipeline.restore_enrollment(set.clone())?;
            self.persisted = Some(set);
        }
        self.enrollment_file = Some(path);
        Ok(self)
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn status(&self) -> Status {
        let set = self.pipeline.enrollment();
        Status {
            mode: self.pipeline.mode(),
            enrolled: set.len(),
            capacity: set.capacity(),
            threshold: set.threshold(),
            sample_rate_hz: self.pipeline.config().stream.sample_rate_hz,
            producer_active: self.producer.is_some(),
            windows: self.pipeline.stats().windows,
            memory: self.pipeline.budget().map(|b| MemorySummary {
                total_bytes: b.total(),
                limit_bytes: b.limit,
            }),
        }
    }

    /// Claims the audio input. The stream is emptied and the pipeline goes
    /// back to the persisted enrollment state.
    pub fn open_session(&mut self, sample_rate: u32) -> Result<(SessionId, Status), ServiceError> {
        let expected = self.pipeline.config().stream.sample_rate_hz;
        if sample_rate != expected {
            return Err(ServiceError::RateMismatch {
                declared: sample_rate,
                expected,
            });
        }
        if self.producer.is_some() {
            return Err(ServiceError::ProducerBusy);
        }
        self.stream.clear();
        match &self.persisted {
            Some(set) => self.pipeline.restore_enrollment(set.clone())?,
            None => self.pipeline.reset_enrollment(),
        }
        let id = SessionId(self.next_session);
        self.next_session += 1;
        self.producer = Some(id);
        Ok((id, self.status()))
    }

    pub fn close_session(&mut self, id: SessionId) {
        if self.producer == Some(id) {
            self.producer = None;
            self.stream.clear();
        }
    }

    pub fn handle_message(&mut self, id: SessionId, msg: ClientMessage) -> Vec<ServerMessage> {
        if self.producer != Some(id) {
            return vec![ServerMessage::error(
                ErrorCode::NotProducer,
                format!("session {} does not own the audio input", id.0),
            )];
        }
        match msg {
            ClientMessage::AudioChunk(bytes) => self.feed(&bytes),
            ClientMessage::SetThreshold(t) => {
                self.pipeline.submit(Command::SetThreshold(t));
                self.apply_commands()
            }
            ClientMessage::ResetEnrollment => {
                self.pipeline.submit(Command::ResetEnrollment);
                let mut out = self.apply_commands();
                self.persist(None, &mut out);
                out
            }
            ClientMessage::GetStatus => vec![ServerMessage::Status(self.status())],
        }
    }

    fn apply_commands(&mut self) -> Vec<ServerMessage> {
        match self.pipeline.apply_pending() {
            Ok(()) => vec![ServerMessage::Status(self.status())],
            Err(e) => vec![ServerMessage::error(ErrorCode::Rejected, e.to_string())],
        }
    }

    fn feed(&mut self, bytes: &[u8]) -> Vec<ServerMessage> {
        let samples = match decode_pcm(bytes) {
            Ok(s) => s,
            Err(e) => return vec![ServerMessage::error(ErrorCode::Malformed, e)],
        };
        let windows = match self.stream.push_samples(&samples) {
            Ok(w) => w,
            Err(e @ tinysv::Error::Overrun { .. }) => {
                return vec![ServerMessage::error(ErrorCode::Overrun, e.to_string())]
            }
            Err(e) => return vec![ServerMessage::error(ErrorCode::Internal, e.to_string())],
        };
        let mut out = Vec::with_capacity(windows.len());
        for w in &windows {
            let was_enrolling = self.pipeline.mode() == Mode::Enrolling;
            match self.pipeline.process_window(w) {
                Ok(event) => out.push(ServerMessage::Event(event)),
                Err(e) => {
                    out.push(ServerMessage::error(ErrorCode::Internal, e.to_string()));
                    continue;
                }
            }
            if was_enrolling && self.pipeline.mode() == Mode::Inferring {
                let set = self.pipeline.enrollment().clone();
                self.persist(Some(set), &mut out);
                out.push(ServerMessage::Status(self.status()));
            }
        }
        out
    }

    fn persist(&mut self, set: Option<EnrollmentSet>, out: &mut Vec<ServerMessage>) {
        if let Some(path) = &self.enrollment_file {
            let to_write = set.clone().unwrap_or_else(|| self.pipeline.enrollment().clone());
            if let Err(e) = to_write.save(path) {
                out.push(ServerMessage::error(ErrorCode::Internal, format!("saving enrollment: {e}")));
            }
        }
        self.persisted = set;
    }

    pub fn export_enrollment(&self) -> Vec<u8> {
        self.pipeline.enrollment().to_bytes()
    }

    /// Replaces the enrollment state with a serialized set and persists it.
    pub fn import_enrollment(&mut self, bytes: &[u8]) -> Result<Status, ServiceError> {
        let set = EnrollmentSet::from_bytes(bytes)?;
        if set.capacity() != self.pipeline.config().enrollment_size {
            return Err(tinysv::Error::InvalidConfig(format!(
                "imported set holds {} vectors, pipeline enrolls {}",
                set.capacity(),
                self.pipeline.config().enrollment_size
            ))
            .into());
        }
        self.pipeline.restore_enrollment(set.clone())?;
        let mut errs = Vec::new();
        self.persist(Some(set), &mut errs);
        if let Some(ServerMessage::Error { message, .. }) = errs.pop() {
            return Err(tinysv::Error::InvalidConfig(message).into());
        }
        Ok(self.status())
    }
}

mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use futures::{SinkExt, StreamExt};
use tokio_tungstenite::tungstenite::Message;
use tower::ServiceExt;

use tinysv_service::server::{router, spawn};
use tinysv_service::{ServerMessage, Status};

async fn start() -> (std::net::SocketAddr, axum::Router) {
    let app = router(spawn(common::demo()));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let served = app.clone();
    tokio::spawn(async move { axum::serve(listener, served).await.unwrap() });
    (addr, app)
}

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

async fn next_msg(ws: &mut Ws) -> ServerMessage {
    loop {
        match ws.next().await.expect("socket open").expect("frame") {
            Message::Text(t) => return serde_json::from_str(t.as_str()).unwrap(),
            Message::Close(_) => panic!("closed"),
            _ => continue,
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn stream_session_round_trip() {
    let (addr, app) = start().await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/stream?sample_rate=16000"))
        .await
        .unwrap();
    match next_msg(&mut ws).await {
        ServerMessage::Status(s) => assert!(s.producer_active),
        other => panic!("{other:?}"),
    }

    let (mut second, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/stream?sample_rate=16000"))
        .await
        .unwrap();
    let busy = next_msg(&mut second).await.to_json();
    assert!(busy.contains("producer_busy"), "{busy}");

    let (mut watcher, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/stream")).await.unwrap();
    assert!(matches!(next_msg(&mut watcher).await, ServerMessage::Status(_)));

    let audio = common::pcm(&common::script(4, |k| if k == 0 { 9000 } else { 0 }));
    ws.send(Message::Binary(audio.into())).await.unwrap();
    for socket in [&mut ws, &mut watcher] {
        match next_msg(socket).await {
            ServerMessage::Event(e) => {
                assert_eq!(e.t, 0.0);
                assert_eq!(e.detail.progress.unwrap().filled, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    ws.send(Message::Text(r#"{"kind":"set_threshold","value":0.85}"#.into())).await.unwrap();
    match next_msg(&mut ws).await {
        ServerMessage::Status(s) => assert_eq!(s.threshold, 0.85),
        other => panic!("{other:?}"),
    }
    ws.send(Message::Text("{oops".into())).await.unwrap();
    assert!(next_msg(&mut ws).await.to_json().contains("malformed"));

    let res = app
        .clone()
        .oneshot(Request::get("/status").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let body = axum::body::to_bytes(res.into_body(), 1 << 20).await.unwrap();
    let status: Status = serde_json::from_slice(&body).unwrap();
    assert_eq!((status.enrolled, status.threshold, status.windows), (1, 0.85, 1));
}

#[tokio::test]
async fn enrollment_export_and_import() {
    let (_, app) = start().await;
    let res = app
        .clone()
        .oneshot(Request::get("/enrollment/export").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let bytes = axum::body::to_bytes(res.into_body(), 1 << 20).await.unwrap();
    assert_eq!(&bytes[..4], b"TSVE");

    let res = app
        .clone()
        .oneshot(Request::post("/enrollment/import").body(Body::from(bytes.clone())).unwrap())
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::OK);

    let res = app
        .oneshot(Request::post("/enrollment/import").body(Body::from("garbage")).unwrap())
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);
}

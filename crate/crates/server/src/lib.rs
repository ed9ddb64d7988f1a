//! HTTP gateway: asks one question of several biases at once and keeps a
//! durable, shareable history of the answers.

pub mod error;
pub mod gateway;
pub mod http;
pub mod model;
pub mod store;

pub use error::ServeError;
pub use gateway::{Gateway, GatewayConfig};
pub use http::{router, serve};
pub use store::{Store, StoreError};

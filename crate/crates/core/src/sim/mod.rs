//! Deterministic app simulator: a JSON app model plus a session that plays
//! it behind the [`Driver`](crate::driver::Driver) interface.

pub mod model;
pub mod session;

pub use model::{load_app_model, AppInput, AppModel, ModelError};
pub use session::{simulate, SimSession};

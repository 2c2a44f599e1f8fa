//! Small feed-forward networks: dense and 1-D convolution layers with
//! sigmoid/ReLU activations, trained by backpropagation and Adam.

mod checkpoint;
mod complexity;
mod gradcheck;
mod network;
mod optim;

pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_HEADER};
pub use complexity::{complexity, ComplexityReport};
pub use gradcheck::gradient_check;
pub use network::{LayerSpec, Network, Padding, Shape, Workspace};
pub use optim::{mse_loss, Adam};

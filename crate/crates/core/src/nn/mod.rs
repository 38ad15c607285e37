//! Network description, forward/backward passes and the concrete
//! architectures used by the experiments.

mod model_io;
mod network;
mod spec;

pub use model_io::{load_model, model_from_json, model_to_json, save_model, ModelFile};
pub use network::{
    argmax_labels, one_hot, quadratic_loss, quadratic_loss_masked, ForwardCacheOf, NetworkOf,
};
pub use spec::{
    build_facade_net, build_toy_net, facade_parameter_count, ConvSlot, LayerKind, LayerSpec,
    NetworkSpec, FACADE_CLASSES, FACADE_CONV1_FILTERS, FACADE_CONV3_FILTERS, FACADE_INPUT_CHANNELS,
    FACADE_PATCH, LAYER_SCALING_K, TOY_PATCH,
};

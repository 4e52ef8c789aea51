"""A small numpy network engine: layers with exact backward passes, Adam, gradient checks."""

from .functional import (
    BatchTooSmall,
    InvalidLabel,
    ShapeMismatch,
    batchnorm_backward,
    batchnorm_forward,
    conv1d_backward,
    conv1d_forward,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    softmax,
    softmax_cross_entropy,
)
from .gradcheck import ParamCheck, gradient_check
from .layers import (
    BatchNorm,
    BatchNormSpec,
    Conv1d,
    Conv1dSpec,
    Dense,
    DenseSpec,
    Dropout,
    DropoutSpec,
    Flatten,
    FlattenSpec,
    Parameter,
    ReLU,
    ReLUSpec,
)
from .network import Network, Sequential, build_sequential, init_params
from .optim import Adam, adam_step

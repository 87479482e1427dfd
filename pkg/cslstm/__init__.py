__project__ = "cslstm"
__version__ = "0.1.0"

from cslstm.config import Config
from cslstm.config import load_config
from cslstm.detect import evaluate
from cslstm.detect import score
from cslstm.error import CSLSTMError
from cslstm.model import CSLSTM
from cslstm.model import ModelConfig
from cslstm.series import ingest_csv
from cslstm.trainer import TrainConfig
from cslstm.trainer import train
from cslstm.wavelet import denoise

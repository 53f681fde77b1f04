"""Hidden Markov models for discovering search tactics in session logs."""

__version__ = "0.1.0"

from .errors import (
    DegenerateSequenceError,
    EncodingError,
    LogFormatError,
    ModelValidationError,
    TacticHMMError,
)
from .model import PAPER_ALPHABET, ActionAlphabet, EncodedCorpus, HmmModel, Sequence, TrainConfig
from .hmm import (
    Trellis,
    backward,
    baum_welch_step,
    corpus_log_likelihood,
    forward,
    log_likelihood,
    posteriors,
    random_model,
    run_em,
    train,
    viterbi,
)
from .selection import BicCurve, BicPoint, bic, num_parameters, sweep
from .simulate import PlantedSpec, paper_planted_model, sample
from .report import TacticReport, align, build_report, dominant_path, label_tactics, prune_emissions, render_heatmap

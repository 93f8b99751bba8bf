"""Text-dependent speaker verification with enrollment-time data augmentation.

Pipeline: WAV in, 57-dim normalized cepstral features, EM-trained
background GMM, MAP-adapted per-speaker models (one per enrollment-data
variant), frame-averaged log-likelihood-ratio scoring, score fusion, and
EER / MinDCF evaluation over the four text-dependent trial types.
"""

__version__ = "0.1.0"

from .audio import Manifest, ManifestEntry, Waveform, load_manifest, read_wav, save_manifest, write_wav
from .augment import (
    AugmentSpec,
    WowParams,
    add_noise_snr,
    apply_ir,
    augment_variants,
    harmonic_distort,
    pitch_shift,
    sound_mix,
    wow_resample,
)
from .features import (
    FeatureMatrix,
    FrontendConfig,
    append_deltas,
    cmvn,
    energy_vad,
    extract_features,
    frame_signal,
    load_features,
    mfcc_static,
    rasta_filter,
    save_features,
)
from .gmm import (
    DiagGmm,
    EmConfig,
    MapConfig,
    em_fit,
    gmm_log_likelihood,
    llr_score,
    load_gmm,
    map_adapt,
    save_gmm,
    train_ubm,
)
from .config import ExperimentConfig, load_config
from .corpus import CorpusConfig, gen_synth_corpus
from .experiment import SpeakerModelSet, enroll_all, run_experiment, score_trials
from .metrics import DcfParams, compute_eer, compute_min_dcf, det_points, fuse_scores
from .synth import SynthSpeakerSpec, synth_utterance
from .trials import EvalReport, ScoreSet, Trial, TrialList, evaluate_trials, load_trials, save_trials

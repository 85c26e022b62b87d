"""
Public API for the lgd project.
"""
from importlib.metadata import PackageNotFoundError, version

# Errors
from .lgd_exception import CampaignFailedError  # noqa: F401
from .lgd_exception import DimensionMismatchError  # noqa: F401
from .lgd_exception import LgdException  # noqa: F401
from .lgd_exception import LgdTypeError  # noqa: F401
from .lgd_exception import LgdValueError  # noqa: F401
from .lgd_exception import LogFormatError  # noqa: F401
from .lgd_exception import ManifestError  # noqa: F401
from .lgd_exception import MissionFormatError  # noqa: F401
from .lgd_exception import NoSegmentsError  # noqa: F401
from .lgd_exception import ParamTableError  # noqa: F401
from .lgd_exception import SimulationDivergedError  # noqa: F401
from .lgd_exception import TrainingDivergedError  # noqa: F401
# Flight log campaigns
from .lgd_flightlog import FlightLog  # noqa: F401
from .lgd_flightlog import LogSet  # noqa: F401
from .lgd_flightlog import Segment  # noqa: F401
from .lgd_flightlog import generate_campaign  # noqa: F401
from .lgd_flightlog import read_log  # noqa: F401
from .lgd_flightlog import segment  # noqa: F401
from .lgd_flightlog import split_flights  # noqa: F401
from .lgd_flightlog import write_log  # noqa: F401
# Range guidelines
from .lgd_guideline import RangeGuideline  # noqa: F401
from .lgd_guideline import ValidationRecord  # noqa: F401
from .lgd_guideline import pareto_optimize  # noqa: F401
from .lgd_guideline import select_guideline  # noqa: F401
from .lgd_logging import lgd_logger  # noqa: F401
from .lgd_logging import lgd_reset_logging  # noqa: F401
from .lgd_logging import lgd_setup_logging  # noqa: F401
from .lgd_mission import Mission  # noqa: F401
from .lgd_mission import builtin_mission  # noqa: F401
from .lgd_mission import load_mission  # noqa: F401
# Flight monitor
from .lgd_monitor import Label  # noqa: F401
from .lgd_monitor import Verdict  # noqa: F401
from .lgd_monitor import classify  # noqa: F401
from .lgd_monitor import prearm_check  # noqa: F401
# Parameter tables
from .lgd_paramspec import Configuration  # noqa: F401
from .lgd_paramspec import ParameterTable  # noqa: F401
from .lgd_paramspec import default_table  # noqa: F401
from .lgd_paramspec import load_param_table  # noqa: F401
# Stage commands
from .lgd_pipeline import RunContext  # noqa: F401
from .lgd_pipeline import RunManifest  # noqa: F401
from .lgd_pipeline import cmd_evaluate  # noqa: F401
from .lgd_pipeline import cmd_genlogs  # noqa: F401
from .lgd_pipeline import cmd_guideline  # noqa: F401
from .lgd_pipeline import cmd_report  # noqa: F401
from .lgd_pipeline import cmd_search  # noqa: F401
from .lgd_pipeline import cmd_train  # noqa: F401
from .lgd_pipeline import cmd_validate  # noqa: F401
from .lgd_pipeline import resolve_out_dir  # noqa: F401
from .lgd_pipeline import run_all  # noqa: F401
# Predictor
from .lgd_predictor import SurrogateModel  # noqa: F401
from .lgd_predictor import deviation  # noqa: F401
from .lgd_predictor import extract_features  # noqa: F401
from .lgd_predictor import load_model  # noqa: F401
from .lgd_predictor import save_model  # noqa: F401
from .lgd_predictor import train  # noqa: F401
from .lgd_report import ReportSummary  # noqa: F401
from .lgd_report import summarize  # noqa: F401
from .lgd_runner import LgdMissionPool  # noqa: F401
from .lgd_runner import MissionJob  # noqa: F401
# Configuration search
from .lgd_search import PotentialSet  # noqa: F401
from .lgd_search import meanshift_cluster  # noqa: F401
from .lgd_search import run_search  # noqa: F401
from .lgd_search import search_segment  # noqa: F401
from .lgd_settings import CampaignSettings  # noqa: F401
from .lgd_settings import GuidelineParams  # noqa: F401
from .lgd_settings import PredictorHyperparams  # noqa: F401
from .lgd_settings import SearchParams  # noqa: F401
from .lgd_settings import ValidateSettings  # noqa: F401
# Simulator
from .lgd_simkernel import FlightTrace  # noqa: F401
from .lgd_simkernel import Injection  # noqa: F401
from .lgd_simkernel import run_mission  # noqa: F401
# Some simple progress indicators.
from .progress import LgdLogProgress  # noqa: F401
from .progress import LgdMultiProgress  # noqa: F401
from .progress import LgdNoProgress  # noqa: F401
from .progress import LgdProgress  # noqa: F401
# Resource File Support
from .rc import LgdJsonRC  # noqa: F401
from .rc import LgdRC  # noqa: F401
from .rc import LgdTomlRC  # noqa: F401
from .rc import lgd_rc_factory  # noqa: F401
# Serialization to file
from .serialize import LgdDump  # noqa: F401
from .serialize import LgdDumpConfig  # noqa: F401
from .serialize import LgdDumpCSV  # noqa: F401
from .serialize import LgdDumpMarkdown  # noqa: F401
from .serialize import lgd_save_csv  # noqa: F401
from .serialize import lgd_save_md  # noqa: F401

try:
    __version__ = version("lgd")
except PackageNotFoundError:
    __version__ = "unknown"

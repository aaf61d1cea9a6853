from geo_lqr.harness.config import ScenarioConfig, parse_config
from geo_lqr.harness.runner import run

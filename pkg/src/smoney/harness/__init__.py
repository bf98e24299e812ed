from .engine import RunResult, Transcript, VerifyReport, causal_violations, run_scenario, verify_transcript
from .scenario import Scenario, builtin_scenario_path, load_scenario, parse_scenario

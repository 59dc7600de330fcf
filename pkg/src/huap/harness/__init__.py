from .actors import (
    AttributeAuthority,
    CapabilityError,
    CloudProvider,
    DataOwner,
    DataUser,
    Device,
    HarnessError,
    PoolEmpty,
    ProtocolError,
)
from .bus import Bus, Envelope, Transcript
from .scenario import Scenario, ScenarioError, load_script, run_scenario
from .store import DirectoryStore

__all__ = [
    "AttributeAuthority",
    "Bus",
    "CapabilityError",
    "CloudProvider",
    "DataOwner",
    "DataUser",
    "Device",
    "DirectoryStore",
    "Envelope",
    "HarnessError",
    "PoolEmpty",
    "ProtocolError",
    "Scenario",
    "ScenarioError",
    "Transcript",
    "load_script",
    "run_scenario",
]

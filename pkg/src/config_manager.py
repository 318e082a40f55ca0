"""
Configuration management module
Handles loading, saving, and initializing configuration files
"""

import copy
import socket
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Any, Optional
import toml

from .formula import SetCardError


class ConfigError(SetCardError):
    """Configuration-related errors"""
    pass


DEFAULT_CONFIG: Dict[str, Any] = {
    "general": {
        "log_level": "info"
    },
    "limits": {
        "time_limit": 60,
        "ilp_nodes": 1_000_000,
        "max_branches": 100_000,
        "explicit_max_set_vars": 12,
        "oracle_ceiling": 100_000_000
    },
    "solver": {
        "strategy": "explicit",
        "sparse_k": 0,
        "sparse_escalate": True
    },
    "report": {
        "max_listed_elements": 4096
    }
}


@dataclass(frozen=True)
class SolverLimits:
    """Resource limits applied to one solve call"""
    time_limit_s: float = 60.0
    ilp_nodes: int = 1_000_000
    max_branches: int = 100_000
    explicit_max_set_vars: int = 12
    oracle_ceiling: int = 100_000_000


def limits_from_config(config: Dict[str, Any]) -> SolverLimits:
    """Build solver limits from a loaded configuration
    
    Args:
        config: Configuration dictionary
        
    Returns:
        SolverLimits instance
    """
    limits = config.get("limits", {})
    defaults = DEFAULT_CONFIG["limits"]
    return SolverLimits(
        time_limit_s=float(limits.get("time_limit", defaults["time_limit"])),
        ilp_nodes=int(limits.get("ilp_nodes", defaults["ilp_nodes"])),
        max_branches=int(limits.get("max_branches", defaults["max_branches"])),
        explicit_max_set_vars=int(limits.get("explicit_max_set_vars", defaults["explicit_max_set_vars"])),
        oracle_ceiling=int(limits.get("oracle_ceiling", defaults["oracle_ceiling"])),
    )


class ConfigManager:
    """Manages configuration files and directories"""
    
    def __init__(self, project_root: Optional[Path] = None, config_dir: Optional[Path] = None):
        """Initialize configuration manager
        
        Args:
            project_root: Root directory of the project. Defaults to script location.
            config_dir: Explicit configuration directory, overriding config/<hostname>
        """
        if project_root is None:
            project_root = Path(__file__).parent.parent
        
        self.project_root = Path(project_root)
        self.hostname = socket.gethostname()
        if config_dir is None:
            config_dir = self.project_root / "config" / self.hostname
        self.config_dir = Path(config_dir)
        self.logs_dir = self.config_dir / "logs"
        self.config_file = self.config_dir / "config.toml"
    
    def initialize(self) -> bool:
        """Initialize configuration directory structure
        
        Creates all necessary directories and default config file if they don't exist.
        
        Returns:
            True if initialization was successful
        """
        try:
            self.config_dir.mkdir(parents=True, exist_ok=True)
            self.logs_dir.mkdir(exist_ok=True)
            
            if not self.config_file.exists():
                self._create_default_config()
            
            return True
        except OSError:
            return False
    
    def _create_default_config(self):
        """Create default global configuration file"""
        with open(self.config_file, 'w') as f:
            toml.dump(DEFAULT_CONFIG, f)
    
    def load_config(self) -> Dict[str, Any]:
        """Load global configuration
        
        Returns:
            Configuration dictionary
            
        Raises:
            ConfigError: If config file doesn't exist or is invalid
        """
        if not self.config_file.exists():
            raise ConfigError(
                f"Configuration file not found: {self.config_file}\n"
                f"Run 'init' command to create it."
            )
        
        try:
            with open(self.config_file, 'r') as f:
                config = toml.load(f)
        except toml.TomlDecodeError as e:
            raise ConfigError(f"Invalid TOML syntax in {self.config_file}: {e}")
        except OSError as e:
            raise ConfigError(f"Error reading config file: {e}")
        
        merged = self._merge_defaults(config)
        self._validate_config(merged)
        return merged
    
    def load_or_defaults(self) -> Dict[str, Any]:
        """Load configuration, falling back to defaults when none exists
        
        Returns:
            Configuration dictionary
            
        Raises:
            ConfigError: If an existing config file is invalid
        """
        if not self.config_exists():
            return copy.deepcopy(DEFAULT_CONFIG)
        return self.load_config()
    
    @staticmethod
    def _merge_defaults(config: Dict[str, Any]) -> Dict[str, Any]:
        merged = copy.deepcopy(DEFAULT_CONFIG)
        for section, values in config.items():
            if isinstance(values, dict) and section in merged:
                merged[section].update(values)
            else:
                merged[section] = values
        return merged
    
    def _validate_config(self, config: Dict[str, Any]):
        """Validate configuration structure
        
        Args:
            config: Configuration dictionary to validate
            
        Raises:
            ConfigError: If configuration is invalid
        """
        required_sections = ["general", "limits", "solver", "report"]
        for section in required_sections:
            if section not in config:
                raise ConfigError(f"Missing required section: [{section}]")
            if not isinstance(config[section], dict):
                raise ConfigError(f"Section [{section}] must be a table")
        
        valid_levels = ["debug", "info", "warning", "error"]
        log_level = config["general"].get("log_level", "info")
        if log_level not in valid_levels:
            raise ConfigError(
                f"Invalid log_level: {log_level} "
                f"(must be one of: {', '.join(valid_levels)})"
            )
        
        for key in DEFAULT_CONFIG["limits"]:
            value = config["limits"].get(key)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError(f"Invalid [limits] {key}: {value!r} (must be a positive number)")
        
        strategy = config["solver"].get("strategy")
        if strategy not in ("explicit", "sparse"):
            raise ConfigError(f"Invalid strategy: {strategy} (must be 'explicit' or 'sparse')")
        sparse_k = config["solver"].get("sparse_k", 0)
        if isinstance(sparse_k, bool) or not isinstance(sparse_k, int) or sparse_k < 0:
            raise ConfigError(f"Invalid sparse_k: {sparse_k!r} (must be a natural number)")
        if not isinstance(config["solver"].get("sparse_escalate", True), bool):
            raise ConfigError("Invalid sparse_escalate (must be true or false)")
        
        listed = config["report"].get("max_listed_elements")
        if isinstance(listed, bool) or not isinstance(listed, int) or listed <= 0:
            raise ConfigError(f"Invalid max_listed_elements: {listed!r} (must be a positive integer)")
    
    def save_config(self, config: Dict[str, Any]):
        """Save global configuration
        
        Args:
            config: Configuration dictionary to save
            
        Raises:
            ConfigError: If config is invalid or cannot be saved
        """
        self._validate_config(config)
        
        try:
            self.config_dir.mkdir(parents=True, exist_ok=True)
            with open(self.config_file, 'w') as f:
                toml.dump(config, f)
        except OSError as e:
            raise ConfigError(f"Error saving config file: {e}")
    
    def config_exists(self) -> bool:
        """Check if configuration is initialized
        
        Returns:
            True if config directory and file exist
        """
        return self.config_dir.exists() and self.config_file.exists()

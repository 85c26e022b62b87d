from ._json import LgdJsonRC
from ._toml import LgdTomlRC

__all__ = ['LgdJsonRC', 'LgdTomlRC']

"""
homsol launcher
Runs the command line from a checkout without installing anything
"""

import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.main import run

if __name__ == "__main__":
    sys.exit(run())

import os
import sys

# When run from the build tree, the extension lives next to the other targets.
mod_dir = os.environ.get("MADI_MODULE_DIR")
if mod_dir and mod_dir not in sys.path:
    sys.path.insert(0, mod_dir)

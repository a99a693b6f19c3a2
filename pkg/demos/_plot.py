"""Optional figure output for the demos: active only with --plot and matplotlib."""
import os
import sys

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'figures')


def enabled():
    if '--plot' not in sys.argv:
        return False
    try:
        import matplotlib
        matplotlib.use('Agg')
    except ImportError:
        print("matplotlib not installed, skipping figures")
        return False
    return True


def save(fig, name):
    os.makedirs(OUT, exist_ok=True)
    path = os.path.join(OUT, name)
    fig.savefig(path, dpi=120, bbox_inches='tight')
    print("saved", path)

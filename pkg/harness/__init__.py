"""Monte-Carlo BER harness for the matched decoding simulator."""
from .simulation import BerRecord, run_point, run_sweep, write_data_file
from .plot_script import emit_plot_script
from .selftest import run_selftest

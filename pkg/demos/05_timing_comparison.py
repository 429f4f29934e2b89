"""Byte-stream pipelines vs a feature-extraction baseline, wall clock.

Times dataset build, training and testing for each view against the
115-feature stat-baseline on the same traffic and split.
"""

import tempfile
from pathlib import Path

from bytecap import ViewKind, binary_synth_classes, synth_corpus, time_pipelines

work = Path(tempfile.mkdtemp())
corpus = synth_corpus(work, binary_synth_classes(100), seed=3,
                      packets_per_session=(30, 80))
print("timing three views plus the stat-baseline (identical splits/epochs)...")
report = time_pipelines(corpus, list(ViewKind), 115, "binary", epochs=8, seed=3)
print()
print(report.to_text_table())
print()
print("csv form:")
print(report.to_csv())

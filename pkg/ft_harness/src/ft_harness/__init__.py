"""Fine-tuning harness for exported ablated dataset splits.

Consumes the export tree written by the auditing CLI
(``fold_<F>/<mode>/{train,dev,test}.jsonl``) and emits a metrics JSON in
the same schema the auditor produces, so both can be merged into one
report.
"""

__version__ = "0.1.0"

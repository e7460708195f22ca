import json
from typing import Any


def vis_print_json(data: Any) -> None:
    '''Canonical output: sorted keys, fixed separators'''
    print(json.dumps(data, sort_keys=True, indent=2, separators=(',', ': ')))

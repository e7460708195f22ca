from typing import Any, Dict, List, Sequence


def vis_print_as_tsv(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    print(*columns, sep='\t')
    for row in rows:
        print(*row, sep='\t')


def records_as_tsv(records: List[Dict[str, Any]]) -> None:
    '''Records sharing the keys of the first one'''
    if not records:
        return
    columns = list(records[0])
    vis_print_as_tsv(columns, [[r.get(c, '') for c in columns] for r in records])

import numpy as np
from typing import Any, List
from tensorank.common import DenseTensor, exact_parts, tensor_from_json


def format_scalar(x: Any) -> str:
    if not isinstance(x, complex):
        re, im = exact_parts(x)
        if im == 0:
            return str(re)
        if re == 0:
            return f'{im}i'
        return f'({re}{"+" if im > 0 else "-"}{abs(im)}i)'
    if abs(x.imag) < 1e-12:
        return f'{x.real:.6g}'
    if abs(x.real) < 1e-12:
        return f'{x.imag:.6g}i'
    return f'({x.real:.6g}{x.imag:+.6g}i)'


def dirac_string(T: DenseTensor, tol: float = 1e-12) -> str:
    '''Nonzero entries as c|i1 i2 ... id>, labels 1-based'''
    terms: List[str] = []
    for idx in np.ndindex(*T.shape):
        x = T.entries[idx]
        if T.exact:
            if not bool(x):
                continue
        else:
            x = complex(x)
            if abs(x) <= tol:
                continue
        label = ''.join(str(i + 1) for i in idx) if max(T.shape) < 10 else ','.join(str(i + 1) for i in idx)
        coeff = format_scalar(x)
        terms.append(f'|{label}>' if coeff == '1' else f'{coeff}|{label}>')
    return ' + '.join(terms) if terms else '0'


def _is_tensor(value: Any) -> bool:
    return isinstance(value, dict) and set(value) == {'shape', 'entries'}


def _lines(data: Any, indent: int) -> List[str]:
    pad = '  ' * indent
    if not isinstance(data, dict):
        return [f'{pad}{data}']
    out: List[str] = []
    width = max((len(str(k)) for k in data), default=0)
    for key in sorted(data):
        value = data[key]
        if _is_tensor(value):
            out.append(f'{pad}{key:<{width}} = {dirac_string(tensor_from_json(value))}')
        elif isinstance(value, dict):
            out.append(f'{pad}{key}:')
            out.extend(_lines(value, indent + 1))
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            out.append(f'{pad}{key}:')
            for i, item in enumerate(value):
                out.append(f'{pad}  [{i}]')
                out.extend(_lines(item, indent + 2))
        else:
            out.append(f'{pad}{key:<{width}} = {value}')
    return out


def vis_print_readable(data: Any) -> None:
    if _is_tensor(data):
        T = tensor_from_json(data)
        print(f'shape {T.shape}')
        print(dirac_string(T))
        return
    for line in _lines(data, 0):
        print(line)

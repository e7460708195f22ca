import os
import re
import numpy as np
from fractions import Fraction
from typing import NamedTuple, Optional, Tuple, Union
from tensorank import common as core
from tensorank.common import DenseTensor, check_shape, evaluate, identity_tensor, kronecker, normalize, tensor_product
from tensorank.symmetric import border_rank_demo_wd, ghz_state, load_polynomial, poly_to_tensor, w_state


THREADS_ENV = 'TENSORANK_THREADS'


class InvalidOperation(Exception):
    pass


class RunConfig(NamedTuple):
    seed: int
    # Numeric tolerance override, None keeps each module's default
    tol: Optional[float]
    trials: int
    starts: int
    # json, tsv or pretty
    output_format: str
    threads: int


def log(*args: object) -> None:
    core.log(*args)


def env_threads() -> int:
    raw = os.environ.get(THREADS_ENV, '1')
    try:
        threads = int(raw)
    except ValueError:
        raise InvalidOperation(f'{THREADS_ENV} must be an integer, got {raw!r}')
    return max(1, threads)


def parse_shape(s: str) -> Tuple[int, ...]:
    """Parse shapes like 3,3,2 or 3x3x2"""
    parts = re.split(r'[,x]', s.strip())
    if not parts or not all(re.fullmatch(r'\d+', p) for p in parts):
        raise ValueError('Not a valid shape')
    return check_shape([int(p) for p in parts])


def parse_number(s: str) -> Union[Fraction, float]:
    '''Rationals like 1/100 stay exact, anything else is a float'''
    if re.fullmatch(r'-?\d+(/\d+)?', s.strip()):
        return Fraction(s.strip())
    return float(s)


def _ints(args: str, count: int, spec: str) -> Tuple[int, ...]:
    values = tuple(int(x) for x in args.split(',')) if args else ()
    if len(values) != count:
        raise InvalidOperation(f'State spec {spec!r} needs {count} integer argument(s)')
    return values


def make_state(spec: str, seed: Optional[int] = None, normalized: bool = False) -> DenseTensor:
    '''Build a tensor from a state spec

    Supported specs:
    - w:d, ghz:n,d, identity:k,d
    - wkron2 (mode-wise Kronecker square of W3), wsquare (W3 tensor W3)
    - random:shape (complex Gaussian, needs a seed), rational:shape (small integers, needs a seed)
    - poly:<file> (symmetric tensor of a polynomial file)
    - border:d,t (two-term approximation of W_d)
    '''
    name, _, args = spec.partition(':')
    try:
        if name == 'w':
            T = w_state(*_ints(args, 1, spec))
        elif name == 'ghz':
            T = ghz_state(*_ints(args, 2, spec))
        elif name == 'identity':
            T = identity_tensor(*_ints(args, 2, spec))
        elif name == 'wkron2':
            T = kronecker(w_state(3), w_state(3))
        elif name == 'wsquare':
            T = tensor_product(w_state(3), w_state(3))
        elif name in {'random', 'rational'}:
            if seed is None:
                raise InvalidOperation(f'State {name!r} needs --seed')
            shape = parse_shape(args)
            rng = np.random.default_rng(seed)
            if name == 'random':
                T = DenseTensor(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
            else:
                T = DenseTensor(core.exact_array(rng.integers(-3, 4, size=shape).tolist()))
        elif name == 'poly':
            T = poly_to_tensor(load_polynomial(args))
        elif name == 'border':
            d, t = args.split(',')
            T = evaluate(border_rank_demo_wd(int(d), parse_number(t)))
        else:
            raise InvalidOperation(f'Unknown state spec {spec!r}')
    except core.TensorError:
        raise
    except ValueError as err:
        raise InvalidOperation(f'Bad state spec {spec!r}: {err}')
    return normalize(T) if normalized else T


def run_config(args: object, output_format: str = 'json') -> RunConfig:
    return RunConfig(
        seed=getattr(args, 'seed', 0),
        tol=getattr(args, 'tol', None),
        trials=getattr(args, 'trials', 3),
        starts=getattr(args, 'starts', 16),
        output_format=getattr(args, 'format', output_format),
        threads=env_threads(),
    )

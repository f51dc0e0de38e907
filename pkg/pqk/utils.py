#!/usr/bin/env python
################################################################################
#   pqk - pruning, quantization and knowledge distillation for compact networks
#
#   Copyright (C) 2026 pqk developers
#
#   Redistribution and use in source and binary forms, with or without
#   modification, are permitted provided that the following conditions are met:
#
#   * Redistributions of source code must retain the above copyright notice, this
#     list of conditions and the following disclaimer.
#
#   * Redistributions in binary form must reproduce the above copyright notice,
#     this list of conditions and the following disclaimer in the documentation
#     and/or other materials provided with the distribution.
#
#   THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS"
#   AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE
#   IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
#   DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR CONTRIBUTORS BE LIABLE
#   FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL
#   DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR
#   SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER
#   CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY,
#   OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE
#   OF THIS SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.
################################################################################

# Utilities mostly for interfacing with file system and settings

import os
import sys
import logging
import functools
from contextlib import contextmanager
from .errors import DataError, PqkError


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s: %(message)s'

THREAD_VARIABLES = ('OMP_NUM_THREADS', 'OPENBLAS_NUM_THREADS', 'MKL_NUM_THREADS', 'NUMEXPR_NUM_THREADS')


# Settings

def configure_logging(verbose=False):
    """ Root handler on stderr, DEBUG when verbose """
    level = logging.DEBUG if verbose else logging.INFO
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)


def limit_threads(environ=None):
    """ Cap BLAS/OpenMP pools from PQK_THREADS; only effective before numpy is imported """
    environ = os.environ if environ is None else environ
    threads = environ.get('PQK_THREADS')
    if not threads:
        return None
    if not threads.isdigit() or int(threads) < 1:
        return None
    for var in THREAD_VARIABLES:
        environ[var] = threads
    return int(threads)


# File utilities

@contextmanager
def io_errors(path):
    """ Re-raise OSError as DataError naming the path """
    try:
        yield
    except OSError as e:
        raise DataError('%s: %s' % (path, e.strerror or e))


def make_outdir(outdir):
    """ Create the output directory if needed, return its absolute path """
    outdir = os.path.abspath(outdir)
    with io_errors(outdir):
        if not os.path.exists(outdir):
            os.makedirs(outdir)
    return outdir


def read_bytes(path):
    with io_errors(path):
        with open(path, 'rb') as f:
            return f.read()


def write_bytes(path, data):
    """ Write through a temporary file so readers never see a partial file """
    tmp = path + '.tmp'
    with io_errors(path):
        with open(tmp, 'wb') as f:
            f.write(data)
        os.replace(tmp, path)


# Command-line support

def exits_on_error(func):
    """ Log a PqkError and exit with its code instead of a traceback """
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except PqkError as e:
            logger.error('%s', e)
            logger.debug('details', exc_info=True)
            sys.exit(e.exit_code)
    return wrapper

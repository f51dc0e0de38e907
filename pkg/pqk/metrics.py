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

# Long-format metrics stream, one CSV row per (epoch, phase, split, path, metric)

import csv
import io
import os
from .utils import io_errors


HEADER = ('epoch', 'phase', 'iter', 'split', 'path', 'metric', 'value')


def format_value(value):
    if isinstance(value, str):
        return value
    return '%.9g' % value


class MetricsWriter(object):
    """ Buffers rows and appends them to the file at each flush (epoch boundary)

    With no filename rows are only kept in memory.
    """

    def __init__(self, filename=None, append=False):
        self.filename = filename
        self.rows = []
        self.pending = []
        if filename is not None and not (append and os.path.exists(filename)):
            with io_errors(filename):
                with open(filename, 'w', newline='', encoding='utf-8') as f:
                    f.write(','.join(HEADER) + '\n')

    def add(self, epoch, phase, iteration, split, path, metric, value):
        row = (str(epoch), str(phase), str(iteration), split, path, metric, format_value(value))
        self.rows.append(row)
        self.pending.append(row)

    def flush(self):
        if self.filename is None or not self.pending:
            self.pending = []
            return
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerows(self.pending)
        with io_errors(self.filename):
            with open(self.filename, 'a', newline='', encoding='utf-8') as f:
                f.write(buf.getvalue())
        self.pending = []

    def select(self, phase=None, split=None, path=None, metric=None):
        """ Rows matching every given field """
        keys = (('phase', 1, phase), ('split', 3, split), ('path', 4, path), ('metric', 5, metric))
        return [r for r in self.rows if all(v is None or r[i] == str(v) for _, i, v in keys)]


def read_metrics(filename):
    """ Rows of a metrics file as dicts """
    with io_errors(filename):
        with open(filename, newline='', encoding='utf-8') as f:
            return list(csv.DictReader(f))

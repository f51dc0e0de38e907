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

import os
import shutil
import tempfile
import unittest
from pqk.metrics import HEADER, MetricsWriter, format_value, read_metrics


class MetricsTest(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.fname = os.path.join(self.tmpdir, 'metrics.csv')

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_values(self):
        """ Shortest form up to 9 significant digits """
        self.assertEqual(format_value(0.0), '0')
        self.assertEqual(format_value(0.5), '0.5')
        self.assertEqual(format_value(1 / 3.0), '0.333333333')
        self.assertEqual(format_value(12), '12')
        self.assertEqual(format_value('n/a'), 'n/a')

    def test_header(self):
        """ A new file starts with the header line """
        MetricsWriter(self.fname)
        with open(self.fname) as f:
            self.assertEqual(f.read(), ','.join(HEADER) + '\n')

    def test_flush(self):
        """ Rows reach the file only at a flush """
        writer = MetricsWriter(self.fname)
        writer.add(1, '1', 4, 'dev', 'student', 'accuracy', 0.75)
        self.assertEqual(read_metrics(self.fname), [])
        writer.flush()
        rows = read_metrics(self.fname)
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]['metric'], 'accuracy')
        self.assertEqual(rows[0]['value'], '0.75')
        self.assertEqual(rows[0]['iter'], '4')

    def test_append(self):
        """ Appending keeps earlier rows and the single header """
        writer = MetricsWriter(self.fname)
        writer.add(1, '1', 4, 'train', 'student', 'loss', 1.5)
        writer.flush()
        writer = MetricsWriter(self.fname, append=True)
        writer.add(2, '1', 8, 'train', 'student', 'loss', 1.25)
        writer.flush()
        self.assertEqual([r['value'] for r in read_metrics(self.fname)], ['1.5', '1.25'])
        MetricsWriter(self.fname)
        self.assertEqual(read_metrics(self.fname), [])

    def test_select(self):
        """ Rows are filtered on any combination of fields """
        writer = MetricsWriter()
        writer.add(1, '2', 4, 'dev', 'student', 'accuracy', 0.5)
        writer.add(1, '2', 4, 'dev', 'teacher', 'accuracy', 0.625)
        writer.add(1, '2', 4, 'train', 'student', 'loss', 0.7)
        self.assertEqual(len(writer.select(phase=2)), 3)
        self.assertEqual(len(writer.select(split='dev')), 2)
        rows = writer.select(path='teacher', metric='accuracy')
        self.assertEqual(rows, [('1', '2', '4', 'dev', 'teacher', 'accuracy', '0.625')])
        self.assertEqual(writer.select(phase='1'), [])

    def test_memory_only(self):
        """ Without a file name nothing is written """
        writer = MetricsWriter()
        writer.add(1, '1', 0, 'dev', 'student', 'accuracy', 1)
        writer.flush()
        self.assertEqual(len(writer.rows), 1)
        self.assertFalse(os.listdir(self.tmpdir))


if __name__ == "__main__":
    unittest.main()

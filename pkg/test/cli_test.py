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

import io
import json
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
import numpy
from pqk import cli
from pqk.checkpoint import load_checkpoint, write_tensor_file
from pqk.data import write_labels
from pqk.metrics import read_metrics
from pqk.scripts import train as train_script
from pqk.tensor import DTYPE
from pqk.utils import read_bytes


TOY = {
    'phase1_epochs': 2,
    'phase2_epochs': 1,
    'arch': {'arch': 'mlp', 'hidden': 8, 'input_shape': [2], 'classes': 2},
    'optim': {'lr': 0.1},
    'prune': {'target_ratio': 0.5, 'update_period': 2},
    'quant': {'bits': 4},
    'kd': {'warmup': 0},
    'data': {'train': 'synthetic:two-spirals:48:0', 'dev': 'synthetic:two-spirals:24:1', 'batch_size': 16},
}


class CliTest(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.config = self.write_config(TOY)

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def path(self, *names):
        return os.path.join(self.tmpdir, *names)

    def write_config(self, values, name='config.json'):
        fname = self.path(name)
        with open(fname, 'w') as f:
            json.dump(values, f)
        return fname

    def pqk(self, *argv):
        """ Run the command line; returns (exit code, stdout) """
        out = io.StringIO()
        code = 0
        with redirect_stdout(out), redirect_stderr(io.StringIO()):
            try:
                cli.main(list(argv))
            except SystemExit as e:
                code = e.code
        return code, out.getvalue()

    def train(self, outdir, *extra):
        return self.pqk('train', '--config', self.config, '--out', self.path(outdir), *extra)

    def test_version(self):
        """ --version exits cleanly """
        self.assertEqual(self.pqk('--version')[0], 0)

    def test_usage(self):
        """ Unknown commands and missing arguments are usage errors """
        self.assertEqual(self.pqk('distill')[0], 2)
        self.assertEqual(self.pqk('train', '--out', self.path('run'))[0], 2)
        self.assertEqual(self.pqk('eval', '--data', 'dev')[0], 2)
        self.assertEqual(self.pqk('finetune', '--resume', 'x.ckpt')[0], 2)

    def test_phase2_needs_resume(self):
        """ Phase 2 alone needs a phase 1 checkpoint """
        self.assertEqual(self.train('run', '--phase', '2')[0], 2)

    def test_bad_config(self):
        """ Configuration problems exit with 2 """
        config = self.write_config(dict(TOY, prune={'target_ratio': 1.5}), 'bad.json')
        self.assertEqual(self.pqk('train', '--config', config, '--out', self.path('run'))[0], 2)

    def test_missing_data(self):
        """ Unreadable data files exit with 3 """
        config = self.write_config(dict(TOY, data={'train': 'x.pqkt,y.u16'}), 'nodata.json')
        self.assertEqual(self.pqk('train', '--config', config, '--out', self.path('run'))[0], 3)

    def test_numeric(self):
        """ A non-finite loss exits with 4 """
        features, labels = self.path('nan.pqkt'), self.path('nan.u16')
        write_tensor_file(features, numpy.full((16, 2), numpy.nan, dtype=DTYPE))
        write_labels(labels, [0, 1] * 8)
        config = self.write_config(dict(TOY, data=dict(TOY['data'], train='%s,%s' % (features, labels))), 'nan.json')
        self.assertEqual(self.pqk('train', '--config', config, '--out', self.path('run'))[0], 4)

    def test_workflow(self):
        """ train, eval, finetune, export and inspect on the toy problem """
        self.assertEqual(self.train('run')[0], 0)
        for name in ('phase1.ckpt', 'phase2.ckpt', 'metrics.csv'):
            self.assertTrue(os.path.exists(self.path('run', name)))
        phases = set(row['phase'] for row in read_metrics(self.path('run', 'metrics.csv')))
        self.assertEqual(phases, {'1', '2'})

        phase1, phase2 = self.path('run', 'phase1.ckpt'), self.path('run', 'phase2.ckpt')
        for path in ('student', 'teacher'):
            code, out = self.pqk('eval', '--ckpt', phase2, '--data', 'dev', '--path', path)
            self.assertEqual(code, 0)
            accuracy = float(out.strip().split('=')[1])
            self.assertTrue(0 <= accuracy <= 1)
        self.assertEqual(self.pqk('eval', '--ckpt', phase1, '--data', 'dev', '--path', 'teacher')[0], 2)
        self.assertEqual(self.pqk('eval', '--ckpt', phase2, '--data', 'synthetic:gaussian-blobs:30:0:dims=3')[0], 3)
        self.assertEqual(self.pqk('eval', '--ckpt', self.path('run', 'none.ckpt'), '--data', 'dev')[0], 3)

        code, _ = self.pqk('finetune', '--resume', phase1, '--lr', '0.01', '--out', self.path('finetune'))
        self.assertEqual(code, 0)
        self.assertEqual(load_checkpoint(self.path('finetune', 'finetune.ckpt')).stage, 'finetune')
        self.assertEqual(self.pqk('finetune', '--resume', phase2, '--lr', '0.01', '--out', self.path('ft2'))[0], 2)

        export = self.path('model.pqkx')
        self.assertEqual(self.pqk('export', '--ckpt', phase2, '--out', export, '--samples', '8')[0], 0)
        self.assertTrue(os.path.exists(export))

        code, out = self.pqk('inspect', '--ckpt', phase2)
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertIn('stage phase2, epoch 1', lines[0])
        self.assertEqual(lines[1].split(), ['name', 'shape', 'sparsity', 'k', 'S_w', 'codes'])
        self.assertEqual([line.split()[0] for line in lines[2:]], ['fc1', 'fc2', 'fc3'])
        self.assertEqual(lines[2].split()[1:3], ['2x8', '0.500000'])

    def test_vanilla_export(self):
        """ The unquantized baseline cannot be exported """
        self.assertEqual(self.train('run', '--phase', 'vanilla')[0], 0)
        vanilla = self.path('run', 'vanilla.ckpt')
        self.assertEqual(load_checkpoint(vanilla).stage, 'vanilla')
        self.assertEqual(self.pqk('export', '--ckpt', vanilla, '--out', self.path('v.pqkx'))[0], 2)

    def test_deterministic(self):
        """ Reruns with the same seed produce identical files """
        self.train('a')
        self.train('b')
        for name in ('metrics.csv', 'phase1.ckpt', 'phase2.ckpt'):
            self.assertEqual(read_bytes(self.path('a', name)), read_bytes(self.path('b', name)))
        self.train('c', '--seed', '1')
        self.assertNotEqual(read_bytes(self.path('a', 'metrics.csv')), read_bytes(self.path('c', 'metrics.csv')))

    def test_resume(self):
        """ Phase 1 then phase 2 from its checkpoint equals one run of both """
        self.train('both')
        self.train('split', '--phase', '1')
        code, _ = self.pqk('train', '--phase', '2', '--resume', self.path('split', 'phase1.ckpt'),
                           '--out', self.path('split'))
        self.assertEqual(code, 0)
        self.assertEqual(read_bytes(self.path('split', 'phase2.ckpt')), read_bytes(self.path('both', 'phase2.ckpt')))
        self.assertEqual(read_bytes(self.path('split', 'metrics.csv')), read_bytes(self.path('both', 'metrics.csv')))

    def test_script_entry(self):
        """ Scripts run on their own as well """
        with redirect_stderr(io.StringIO()):
            train_script.main(['--config', self.config, '--out', self.path('run'), '--phase', '1'])
        self.assertTrue(os.path.exists(self.path('run', 'phase1.ckpt')))
        self.assertFalse(os.path.exists(self.path('run', 'phase2.ckpt')))


if __name__ == "__main__":
    unittest.main()

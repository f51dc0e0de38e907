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

import json
import os
import shutil
import tempfile
import unittest
from pqk.config import TrainConfig, config_from_json, load_config, override
from pqk.errors import ConfigError, DataError


class ConfigTest(unittest.TestCase):

    configs = os.path.join(os.path.dirname(__file__), '..', 'configs')

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def write(self, values):
        fname = os.path.join(self.tmpdir, 'config.json')
        with open(fname, 'w') as f:
            f.write(values if isinstance(values, str) else json.dumps(values))
        return fname

    def test_shipped(self):
        """ Every shipped configuration loads """
        for name in ('toy', 'spirals', 'textures'):
            cfg = load_config(os.path.join(self.configs, name + '.json'))
            self.assertEqual(cfg.prune.ramp_epochs, cfg.phase1_epochs)

    def test_toy(self):
        """ Values of the toy configuration """
        cfg = load_config(os.path.join(self.configs, 'toy.json'))
        self.assertEqual((cfg.phase1_epochs, cfg.phase2_epochs), (3, 3))
        self.assertEqual(cfg.arch.arch, 'mlp')
        self.assertEqual(cfg.quant.bits, 4)
        self.assertEqual(cfg.prune.target_ratio, 0.5)
        self.assertEqual(cfg.phase2_optim.lr, cfg.optim.lr)
        self.assertEqual(cfg.data.batch_size, 32)

    def test_defaults(self):
        """ Omitted sections take their defaults """
        cfg = load_config(self.write({'phase1_epochs': 4}))
        self.assertEqual(cfg.phase1_epochs, 4)
        self.assertEqual(cfg.prune.ramp_epochs, 4)
        self.assertEqual(cfg.kd.temperature, 2.0)
        self.assertEqual(cfg.update_order, 'sequential')

    def test_unknown_key(self):
        """ Misspelt keys are rejected with their location """
        with self.assertRaises(ConfigError) as cm:
            load_config(self.write({'prune': {'target': 0.5}}))
        self.assertIn('config.prune', str(cm.exception))
        with self.assertRaises(ConfigError):
            load_config(self.write({'epochs': 3}))

    def test_invalid(self):
        """ Invalid JSON and invalid values are configuration errors """
        with self.assertRaises(ConfigError):
            load_config(self.write('{"phase1_epochs": '))
        with self.assertRaises(ConfigError):
            load_config(self.write({'quant': {'bits': 9}}))
        with self.assertRaises(ConfigError):
            load_config(self.write({'update_order': 'alternating'}))
        with self.assertRaises(ConfigError):
            load_config(self.write({'kd': 'strong'}))

    def test_missing(self):
        """ An unreadable file is a data error """
        with self.assertRaises(DataError):
            load_config(os.path.join(self.tmpdir, 'missing.json'))

    def test_override(self):
        """ Seed reaches the architecture, lr only the phase 1 optimizer """
        cfg = TrainConfig()
        new = override(cfg, seed=5, lr=0.01)
        self.assertEqual((new.seed, new.arch.seed), (5, 5))
        self.assertEqual(new.optim.lr, 0.01)
        self.assertEqual(new.phase2_optim.lr, cfg.phase2_optim.lr)
        self.assertEqual(cfg.seed, 0)
        self.assertEqual(override(cfg).to_json(), cfg.to_json())
        with self.assertRaises(ConfigError):
            override(cfg, lr=-1)

    def test_canonical_json(self):
        """ Canonical text parses back to the same configuration """
        cfg = load_config(os.path.join(self.configs, 'spirals.json'))
        text = cfg.to_json()
        self.assertNotIn(' ', text)
        self.assertEqual(list(json.loads(text)), sorted(json.loads(text)))
        self.assertEqual(config_from_json(text).to_json(), text)


if __name__ == "__main__":
    unittest.main()

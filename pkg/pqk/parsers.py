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

import argparse
import sys


class pqkParser(argparse.ArgumentParser):
    """ Extends argparser parser """

    paths = ('student', 'teacher')

    def __init__(self, **kwargs):
        kwargs.setdefault('formatter_class', argparse.ArgumentDefaultsHelpFormatter)
        super(pqkParser, self).__init__(**kwargs)

    def error(self, message):
        """ print help on error """
        sys.stderr.write('error: %s\n' % message)
        self.print_help(sys.stderr)
        sys.exit(2)

    def add_common_parser(self):
        group = self.add_argument_group('common options')
        group.add_argument('-v', '--verbose', help='Print additional info and progress bars', default=False,
                           action='store_true')
        return group

    def add_config_parser(self, required=False):
        """ Configuration file and command-line overrides """
        group = self.add_argument_group('configuration options')
        group.add_argument('--config', help='JSON configuration file', required=required, default=None)
        group.add_argument('--seed', help='Random seed (override)', type=int, default=None)
        group.add_argument('--lr', help='Initial learning rate (override)', type=float, default=None)
        return group

    def add_checkpoint_parser(self, flag='--ckpt', required=True, help='Checkpoint file'):
        group = self.add_argument_group('checkpoint options')
        group.add_argument(flag, help=help, required=required, default=None)
        return group

    def add_output_parser(self, flag='--out', help='Output directory', default='./'):
        group = self.add_argument_group('output options')
        group.add_argument(flag, help=help, default=default)
        return group

    def add_data_parser(self, required=True):
        group = self.add_argument_group('data options')
        group.add_argument(
            '--data', required=required, default=None,
            help='train | dev | FEATURES,LABELS | synthetic:TASK:N:SEED[:key=value,...]')
        group.add_argument('--batch-size', help='Evaluation batch size', type=int, default=256)
        return group

    def add_path_parser(self):
        self.add_argument('--path', help='Forward path to evaluate', choices=self.paths, default='student')

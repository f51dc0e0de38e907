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

"""
pqk command-line entry point: dispatches to the scripts
"""

import argparse
import importlib
from collections import OrderedDict
from .parsers import pqkParser
from .utils import limit_threads
from .version import __version__


COMMANDS = OrderedDict([
    ('train', ('train', 'Phase 1 and/or phase 2 training, or the vanilla baseline')),
    ('finetune', ('finetune', 'Finetune baseline from a phase 1 checkpoint')),
    ('eval', ('evaluate', 'Accuracy of the student or teacher path')),
    ('export', ('export', 'Deployment artifact of the quantized student')),
    ('inspect', ('inspect', 'Per-layer table of a checkpoint')),
])


def main(argv=None):
    limit_threads()
    epilog = '\n'.join('  %-10s%s' % (name, desc) for name, (_, desc) in COMMANDS.items())
    parser = pqkParser(prog='pqk', description='Pruning, quantization and knowledge distillation',
                       epilog='commands:\n' + epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--version', action='version', version='pqk %s' % __version__)
    parser.add_argument('command', choices=list(COMMANDS), help='Subcommand')
    parser.add_argument('args', nargs=argparse.REMAINDER, help='Subcommand arguments (see pqk COMMAND --help)')
    args = parser.parse_args(argv)
    module = importlib.import_module('pqk.scripts.%s' % COMMANDS[args.command][0])
    return module.main(args.args, prog='pqk %s' % args.command)


if __name__ == '__main__':
    main()

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
Finetune a phase 1 student with cross-entropy only, on the phase 2 budget
"""

import os
import logging
from datetime import datetime
from pqk.checkpoint import load_checkpoint, save_checkpoint
from pqk.metrics import MetricsWriter
from pqk.parsers import pqkParser
from pqk.trainer import finetune_baseline
from pqk.utils import configure_logging, exits_on_error, make_outdir


logger = logging.getLogger(__name__)


@exits_on_error
def run(args):
    start0 = datetime.now()
    ckpt = load_checkpoint(args.resume)
    outdir = make_outdir(args.out)
    metrics = MetricsWriter(os.path.join(outdir, 'metrics.csv'))
    result = finetune_baseline(ckpt, args.lr, args.budget, metrics, progress=args.verbose)
    fout = os.path.join(outdir, 'finetune.ckpt')
    save_checkpoint(result.model, result.optimizer, result.config, fout, result.stage, result.epoch, result.iteration)
    logger.info('pqk finetune lr=%s completed (%s) in %s', args.lr, os.path.relpath(outdir), datetime.now() - start0)


def main(argv=None, prog=None):
    parser = pqkParser(prog=prog, description='Finetune baseline: student cross-entropy, no teacher')
    parser.add_checkpoint_parser('--resume', help='Phase 1 checkpoint')
    parser.add_argument('--lr', help='Initial learning rate', type=float, required=True)
    parser.add_argument('--budget', help='Epochs (default: phase2_epochs of the configuration)', type=int,
                        default=None)
    parser.add_output_parser()
    parser.add_common_parser()
    args = parser.parse_args(argv)
    if args.budget is not None and args.budget < 0:
        parser.error('--budget must be >= 0')
    configure_logging(args.verbose)
    run(args)


if __name__ == '__main__':
    main()

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
Train a compact network: pruning with quantization-aware training (phase 1),
then mutual distillation with the resurrected full network (phase 2)
"""

import os
import logging
from datetime import datetime
from pqk.checkpoint import load_checkpoint, save_checkpoint
from pqk.config import load_config, override
from pqk.metrics import MetricsWriter
from pqk.parsers import pqkParser
from pqk.trainer import PHASES, train
from pqk.utils import configure_logging, exits_on_error, make_outdir


logger = logging.getLogger(__name__)


def checkpoint_saver(outdir):
    """ Callback writing <stage>.ckpt into outdir """
    def save(ckpt):
        fout = os.path.join(outdir, '%s.ckpt' % ckpt.stage)
        save_checkpoint(ckpt.model, ckpt.optimizer, ckpt.config, fout, ckpt.stage, ckpt.epoch, ckpt.iteration)
    return save


@exits_on_error
def run(args):
    start0 = datetime.now()
    resume = load_checkpoint(args.resume) if args.resume else None
    cfg = load_config(args.config) if args.config else resume.config
    cfg = override(cfg, seed=args.seed, lr=args.lr)
    outdir = make_outdir(args.out)
    metrics = MetricsWriter(os.path.join(outdir, 'metrics.csv'), append=resume is not None)
    train(cfg, args.phase, resume, metrics, progress=args.verbose, on_checkpoint=checkpoint_saver(outdir))
    logger.info('pqk train %s completed (%s) in %s', args.phase, os.path.relpath(outdir), datetime.now() - start0)


def main(argv=None, prog=None):
    parser = pqkParser(prog=prog, description='Train with pruning, quantization and knowledge distillation')
    parser.add_config_parser()
    parser.add_argument('--phase', help='Phase(s) to run', choices=PHASES, default='both')
    parser.add_checkpoint_parser('--resume', required=False, help='Checkpoint to continue from')
    parser.add_output_parser()
    parser.add_common_parser()
    args = parser.parse_args(argv)
    if args.phase == '2' and args.resume is None:
        parser.error('--phase 2 requires --resume with a phase 1 checkpoint')
    if args.config is None and args.resume is None:
        parser.error('--config is required unless --resume is given')
    configure_logging(args.verbose)
    run(args)


if __name__ == '__main__':
    main()

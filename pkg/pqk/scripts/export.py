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
Export the quantized student for deployment and verify the artifact
"""

import os
import logging
from datetime import datetime
from pqk.checkpoint import export_quantized, load_checkpoint, verify_export
from pqk.data import check_compatible, resolve_data
from pqk.parsers import pqkParser
from pqk.utils import configure_logging, exits_on_error


logger = logging.getLogger(__name__)


@exits_on_error
def run(args):
    start = datetime.now()
    ckpt = load_checkpoint(args.ckpt)
    nbytes = export_quantized(ckpt.model, args.out)
    dataset = resolve_data(args.data, ckpt.config, classes=ckpt.config.arch.classes)
    check_compatible(dataset, ckpt.config.arch)
    verify_export(ckpt.model, args.out, dataset.features[:args.samples])
    logger.info('Exported %s (%s bytes) in %s', os.path.relpath(args.out), nbytes, datetime.now() - start)


def main(argv=None, prog=None):
    parser = pqkParser(prog=prog, description='Write integer codes, masks and step sizes of the student')
    parser.add_checkpoint_parser()
    parser.add_output_parser('--out', help='Export file', default='model.pqkx')
    parser.add_argument('--data', help='Data spec whose first examples verify the export', default='dev')
    parser.add_argument('--samples', help='Number of verification examples', type=int, default=64)
    parser.add_common_parser()
    args = parser.parse_args(argv)
    if args.samples < 1:
        parser.error('--samples must be >= 1')
    configure_logging(args.verbose)
    run(args)


if __name__ == '__main__':
    main()

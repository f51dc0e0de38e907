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
Print the per-layer state of a checkpoint
"""

from pqk.checkpoint import load_checkpoint
from pqk.parsers import pqkParser
from pqk.quantizer import distinct_codes
from pqk.utils import configure_logging, exits_on_error


COLUMNS = ('name', 'shape', 'sparsity', 'k', 'S_w', 'codes')


def layer_table(model):
    """ Rows of (name, shape, sparsity, bits, step size, distinct codes of kept weights) """
    rows = []
    for layer in model.prunable_layers():
        codes = distinct_codes(layer.weight, layer.quant, layer.mask) if layer.quant.enabled else '-'
        rows.append((layer.name, 'x'.join(str(d) for d in layer.shape), '%.6f' % layer.sparsity,
                     str(layer.quant.bits), '%.6g' % layer.quant.step_size, str(codes)))
    return rows


def format_table(rows):
    widths = [max(len(str(r[i])) for r in [COLUMNS] + rows) for i in range(len(COLUMNS))]
    return '\n'.join('  '.join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() for r in [COLUMNS] + rows)


@exits_on_error
def run(args):
    ckpt = load_checkpoint(args.ckpt)
    print('%s: stage %s, epoch %s, iteration %s' % (args.ckpt, ckpt.stage, ckpt.epoch, ckpt.iteration))
    print(format_table(layer_table(ckpt.model)))


def main(argv=None, prog=None):
    parser = pqkParser(prog=prog, description='Inspect a checkpoint')
    parser.add_checkpoint_parser()
    parser.add_common_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    run(args)


if __name__ == '__main__':
    main()

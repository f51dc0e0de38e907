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

# Exception hierarchy, each error knows the process exit code it maps to


class PqkError(Exception):
    """ Base class of all pqk errors """
    exit_code = 1


class ConfigError(PqkError):
    """ Invalid configuration, flag or hyperparameter """
    exit_code = 2


class ShapeError(PqkError, ValueError):
    """ Incompatible tensor shapes """
    exit_code = 2

    def __init__(self, op, *shapes):
        self.op = op
        self.shapes = shapes
        super(ShapeError, self).__init__(
            '%s: incompatible shapes %s' % (op, ' and '.join(str(tuple(s)) for s in shapes)))


class PhaseError(PqkError):
    """ Operation not valid in the current training phase """
    exit_code = 2


class DataError(PqkError):
    """ Dataset content or file access problem """
    exit_code = 3


class FormatError(DataError):
    """ Malformed binary file """

    def __init__(self, message, offset=0, path=None):
        self.offset = offset
        self.path = path
        where = '' if path is None else '%s: ' % path
        super(FormatError, self).__init__('%s%s (at offset %s)' % (where, message, offset))


class CorruptCheckpointError(DataError):
    """ Checkpoint contents do not match their manifest """


class NumericError(PqkError):
    """ Non-finite values during training, or failed numeric verification """
    exit_code = 4

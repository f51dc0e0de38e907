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
import re
import glob
from setuptools import setup

with open('pqk/version.py') as f:
    __version__ = re.search(r"__version__\s*=\s*'([^']+)'", f.read()).group(1)

scripts = ['pqk = pqk.cli:main']
for f in sorted(glob.glob('pqk/scripts/*.py')):
    name = os.path.splitext(os.path.basename(f))[0]
    if name not in ['__init__']:
        scripts.append('pqk_%s = pqk.scripts.%s:main' % (name, name.lower()))

setup(
    name='pqk',
    version=__version__,
    description='Pruning, quantization-aware training and mutual knowledge distillation for compact networks',
    license='FreeBSD',
    packages=['pqk', 'pqk.scripts'],
    python_requires='>=3.7',
    install_requires=['numpy>=1.17', 'scipy>=1.1', 'tqdm'],
    entry_points={'console_scripts': scripts},
)

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

# Training loops
#
# Phase 1 trains the pruned, quantized student from scratch while the pruning
# ratio ramps up. Phase 2 resurrects the pruned weights as a full-precision
# teacher sharing the student's latent store, and trains both with mutual
# distillation: the student loss moves only kept weights (M=1), the teacher
# loss only pruned ones (M=0). Step sizes and masks are frozen in phase 2.

import logging
from datetime import datetime
import numpy
from tqdm import tqdm
from .checkpoint import Checkpoint
from .config import OptimConfig
from .data import check_compatible, resolve_data
from .distiller import cross_entropy, kd_loss_student, kd_loss_teacher
from .errors import ConfigError, NumericError, PhaseError
from .metrics import MetricsWriter
from .model import STUDENT, TEACHER, build_from_config, clone_bn_for_teacher, forward_student, forward_teacher
from .optim import SGD, ParamGroup
from .pruner import maybe_update_masks
from .tensor import Tape, backward


logger = logging.getLogger(__name__)

PHASES = ('1', '2', 'both', 'vanilla')

EVAL_BATCH = 256


# Diagnostics

def layer_report(model):
    """ One line of weight statistics per prunable layer """
    lines = []
    for layer in model.prunable_layers():
        w = layer.weight.data
        finite = numpy.abs(w[numpy.isfinite(w)])
        stats = (finite.min(), finite.max(), finite.mean()) if finite.size else (numpy.nan,) * 3
        lines.append('%s: min|w|=%.4g max|w|=%.4g mean|w|=%.4g sparsity=%.4f S_w=%.4g nan=%s' % (
            (layer.name,) + stats + (layer.sparsity, layer.quant.step_size, int(numpy.isnan(w).sum()))))
    return lines


def _abort(model, message):
    logger.error('%s', message)
    for line in layer_report(model):
        logger.error('  %s', line)
    raise NumericError(message)


def check_finite(model, where, *losses):
    """ Abort with a per-layer dump when a loss, parameter or step size is NaN or infinite """
    for value in losses:
        if not numpy.isfinite(value):
            _abort(model, 'non-finite loss %s at %s' % (value, where))
    for group, params in model.parameter_groups().items():
        for p in params:
            if not numpy.isfinite(p.data).all():
                _abort(model, 'non-finite %s %s at %s' % (group, p.name, where))


# Parameter groups

def _masks(layers, invert=False):
    return {layer.weight.name: (~layer.mask if invert else layer.mask) for layer in layers}


def student_groups(model, train_steps=False, masked_update=True):
    """ Kept weights, biases and student batch-norm; optionally the step sizes """
    layers = model.prunable_layers()
    weights = [layer.weight for layer in layers]
    if masked_update:
        masks = _masks(layers)
        groups = [ParamGroup(weights, update=masks, decay=masks, name='weights')]
    else:
        groups = [ParamGroup(weights, name='weights')]
    others = [layer.bias for layer in layers if layer.bias is not None] + model.bn_parameters(STUDENT)
    groups.append(ParamGroup(others, name='student'))
    if train_steps:
        for layer in layers:
            if layer.quant.trainable:
                groups.append(ParamGroup([layer.quant.step], lr_scale=layer.quant.lr_scale, weight_decay=0.0,
                                         name=layer.quant.step.name))
    return groups


def teacher_groups(model):
    """ Pruned weights (M=0) and teacher batch-norm """
    layers = model.prunable_layers()
    masks = _masks(layers, invert=True)
    return [ParamGroup([layer.weight for layer in layers], update=masks, decay=masks, name='weights'),
            ParamGroup(model.bn_parameters(TEACHER), name='teacher')]


def _params(groups):
    return [p for g in groups for p in g.params]


def _grads(params):
    return [p.grad for p in params]


def _set_grads(params, grads):
    for p, g in zip(params, grads):
        p.grad = g


# Steps

def _ce_step(model, batch, opt, lr, groups, where):
    x, y = batch
    with Tape() as tape:
        z = forward_student(model, x, training=True)
        loss = cross_entropy(z, y)
    check_finite(model, where, loss.item())
    backward(tape, loss, _params(groups))
    opt.step(groups, lr)
    return loss.item()


def phase1_step(model, batch, sched, opt, epoch, iteration, decay_masked=False, lr=None):
    """ Mask update at the pruning cadence, then one QAT step on the student

    iteration counts from 0 within the epoch. Masked positions get no gradient
    through w_bar * M and are also excluded from weight decay unless
    decay_masked is set.
    """
    if model.phase != 1:
        raise PhaseError('phase 1 step on a phase %s model' % model.phase)
    model.init_step_sizes()
    maybe_update_masks(model, sched, epoch, iteration)
    lr = opt.lr(epoch, iteration) if lr is None else lr
    groups = student_groups(model, train_steps=True, masked_update=not decay_masked)
    where = 'phase 1 epoch %s iteration %s' % (epoch, iteration)
    loss = _ce_step(model, batch, opt, lr, groups, where)
    for layer in model.prunable_layers():
        layer.quant.clamp()
    check_finite(model, where)
    return loss


def phase2_step(model, batch, cfg, opt, epoch, iteration=0, lr=None):
    """ One mutual-distillation step; returns (student loss, teacher loss)

    iteration counts phase-2 iterations from 0 and matters for warm-up in
    iteration units. In sequential order the teacher loss is computed after
    the student update; in simultaneous order both come from the same weights.
    """
    if model.phase != 2:
        raise PhaseError('phase 2 step on a phase %s model' % model.phase)
    x, y = batch
    kd = cfg.kd
    alpha, beta = kd.weights(epoch, iteration)
    lr = opt.lr(epoch, iteration) if lr is None else lr
    where = 'phase 2 epoch %s iteration %s' % (epoch, iteration)
    s_groups, t_groups = student_groups(model), teacher_groups(model)
    s_params, t_params = _params(s_groups), _params(t_groups)

    if cfg.update_order == 'simultaneous':
        with Tape() as t_tape:
            z_t = forward_teacher(model, x, training=True)
        with Tape() as s_tape:
            z_s = forward_student(model, x, training=True)
            loss_s = kd_loss_student(z_s, z_t, y, kd, alpha, beta)
        with t_tape:
            loss_t = kd_loss_teacher(z_t, z_s, y, kd, alpha, beta)
        check_finite(model, where, loss_s.item(), loss_t.item())
        s_grads = backward(s_tape, loss_s, s_params)
        t_grads = backward(t_tape, loss_t, t_params)
        _set_grads(s_params, s_grads)
        opt.step(s_groups, lr)
        _set_grads(t_params, t_grads)
        opt.step(t_groups, lr)
        check_finite(model, where)
        return loss_s.item(), loss_t.item()

    # the KL target of the student needs teacher logits; statistics update once, below
    target = None
    if beta > 0:
        target = forward_teacher(model, x, training=True, update_stats=False)
    with Tape() as tape:
        z_s = forward_student(model, x, training=True)
        loss_s = kd_loss_student(z_s, target, y, kd, alpha, beta)
    check_finite(model, where, loss_s.item())
    backward(tape, loss_s, s_params)
    opt.step(s_groups, lr)

    with Tape() as tape:
        z_t = forward_teacher(model, x, training=True)
        loss_t = kd_loss_teacher(z_t, z_s, y, kd, alpha, beta)
    check_finite(model, where, loss_t.item())
    backward(tape, loss_t, t_params)
    opt.step(t_groups, lr)
    check_finite(model, where)
    return loss_s.item(), loss_t.item()


def finetune_step(model, batch, opt, lr):
    """ Cross-entropy step on the student only, masks and step sizes frozen """
    return _ce_step(model, batch, opt, lr, student_groups(model), 'finetune')


def vanilla_step(model, batch, opt, lr):
    """ Plain dense step: every parameter, no masks """
    return _ce_step(model, batch, opt, lr, student_groups(model, masked_update=False), 'vanilla')


# Evaluation

def evaluate(model, dataset, path=STUDENT, batch_size=EVAL_BATCH):
    """ Top-1 accuracy in eval mode (running batch-norm statistics) """
    if path == TEACHER and model.phase != 2:
        raise PhaseError('the teacher path exists only in phase 2')
    correct = 0
    for x, y in dataset.batches(batch_size):
        z = model.forward(x, path, training=False)
        correct += int((z.data.argmax(axis=1) == y).sum())
    return correct / float(len(dataset))


# Epoch loops

def _batches(dataset, cfg, epoch, desc, progress):
    size = cfg.data.batch_size
    return tqdm(dataset.batches(size, seed=cfg.seed, epoch=epoch), total=dataset.num_batches(size),
                desc=desc, disable=not progress, leave=False)


def _record_epoch(metrics, model, epoch, phase, iteration, dev, losses, lr, weights=None):
    paths = (STUDENT, TEACHER) if model.phase == 2 else (STUDENT,)
    for path, value in losses.items():
        metrics.add(epoch, phase, iteration, 'train', path, 'loss', value)
    metrics.add(epoch, phase, iteration, 'train', 'all', 'lr', lr)
    if weights is not None:
        metrics.add(epoch, phase, iteration, 'train', 'all', 'alpha', weights[0])
        metrics.add(epoch, phase, iteration, 'train', 'all', 'beta', weights[1])
    accuracy = {}
    for path in paths:
        accuracy[path] = evaluate(model, dev, path)
        metrics.add(epoch, phase, iteration, 'dev', path, 'accuracy', accuracy[path])
    for layer in model.prunable_layers():
        metrics.add(epoch, phase, iteration, 'model', layer.name, 'sparsity', layer.sparsity)
        metrics.add(epoch, phase, iteration, 'model', layer.name, 'step_size', layer.quant.step_size)
    metrics.flush()
    sparsity = numpy.mean([layer.sparsity for layer in model.prunable_layers()])
    logger.info('%s epoch %s: loss %s dev accuracy %s sparsity %.4f', phase, epoch,
                ' '.join('%s=%.4f' % kv for kv in losses.items()),
                ' '.join('%s=%.4f' % kv for kv in accuracy.items()), sparsity)


def _mean(values):
    return float(numpy.mean(values)) if values else float('nan')


def run_phase1(model, cfg, train_set, dev_set, metrics, opt=None, start_epoch=1, iteration=0, progress=False):
    """ Epochs start_epoch..phase1_epochs of phase 1; returns (optimizer, iteration) """
    opt = opt or SGD(cfg.optim)
    start = datetime.now()
    for epoch in range(start_epoch, cfg.phase1_epochs + 1):
        losses = []
        lr = opt.lr(epoch, iteration)
        for i, batch in enumerate(_batches(train_set, cfg, epoch, 'phase 1 epoch %s' % epoch, progress)):
            lr = opt.lr(epoch, iteration)
            losses.append(phase1_step(model, batch, cfg.prune, opt, epoch, i, cfg.decay_masked, lr))
            iteration += 1
        _record_epoch(metrics, model, epoch, '1', iteration, dev_set, {STUDENT: _mean(losses)}, lr)
    logger.info('Completed phase 1 (%s epochs) in %s', cfg.phase1_epochs - start_epoch + 1, datetime.now() - start)
    return opt, iteration


def begin_phase2(model):
    """ Build the teacher: copy batch-norm state, freeze step sizes """
    clone_bn_for_teacher(model)
    model.freeze_step_sizes()
    model.phase = 2


def run_phase2(model, cfg, train_set, dev_set, metrics, opt=None, start_epoch=1, iteration=0, progress=False):
    """ Epochs start_epoch..phase2_epochs of phase 2; returns (optimizer, iteration) """
    if model.phase == 1:
        begin_phase2(model)
    opt = opt or SGD(cfg.phase2_optim)
    kd = cfg.kd
    start = datetime.now()
    for epoch in range(start_epoch, cfg.phase2_epochs + 1):
        s_losses, t_losses = [], []
        lr = opt.lr(epoch, iteration)
        for batch in _batches(train_set, cfg, epoch, 'phase 2 epoch %s' % epoch, progress):
            if kd.warmup_unit == 'iter' and iteration == kd.warmup and iteration > 0:
                alpha, beta = kd.weights(epoch, iteration)
                metrics.add(epoch, '2', iteration, 'train', 'all', 'alpha', alpha)
                metrics.add(epoch, '2', iteration, 'train', 'all', 'beta', beta)
                logger.info('warm-up finished at iteration %s', iteration)
            lr = opt.lr(epoch, iteration)
            ls, lt = phase2_step(model, batch, cfg, opt, epoch, iteration, lr)
            s_losses.append(ls)
            t_losses.append(lt)
            iteration += 1
        weights = kd.weights(epoch, max(iteration - 1, 0))
        _record_epoch(metrics, model, epoch, '2', iteration, dev_set,
                      {STUDENT: _mean(s_losses), TEACHER: _mean(t_losses)}, lr, weights)
    logger.info('Completed phase 2 (%s epochs) in %s', cfg.phase2_epochs - start_epoch + 1, datetime.now() - start)
    return opt, iteration


def _datasets(cfg):
    train_set = resolve_data('train', cfg)
    dev_set = resolve_data('dev', cfg)
    for dataset in (train_set, dev_set):
        check_compatible(dataset, cfg.arch)
    return train_set, dev_set


def train(cfg, phase='both', resume=None, metrics=None, progress=False, on_checkpoint=None):
    """ Phase 1 then phase 2, either alone, or the vanilla baseline

    resume continues from a Checkpoint: an unfinished phase carries on from its
    last completed epoch, a finished phase 1 hands over to phase 2.
    on_checkpoint is called with the Checkpoint at the end of every phase.
    """
    phase = str(phase)
    if phase not in PHASES:
        raise ConfigError('phase must be one of %s' % ', '.join(PHASES))
    if phase == '2' and resume is None:
        raise ConfigError('phase 2 alone requires a phase-1 checkpoint to resume from')
    train_set, dev_set = _datasets(cfg)
    metrics = MetricsWriter() if metrics is None else metrics
    if phase == 'vanilla':
        ckpt = train_vanilla(cfg, metrics, progress, datasets=(train_set, dev_set))
        if on_checkpoint:
            on_checkpoint(ckpt)
        return ckpt

    ckpt = resume if resume is not None else Checkpoint(build_from_config(cfg), None, cfg, 'phase1')
    if ckpt.stage not in ('phase1', 'phase2'):
        raise PhaseError('cannot continue training from a %s checkpoint' % ckpt.stage)
    model = ckpt.model
    if phase == '1' and ckpt.stage != 'phase1':
        raise PhaseError('phase 1 cannot resume from a phase 2 checkpoint')

    if phase in ('1', 'both') and ckpt.stage == 'phase1':
        opt, iteration = ckpt.optimizer, ckpt.iteration
        if ckpt.epoch < cfg.phase1_epochs:
            opt, iteration = run_phase1(model, cfg, train_set, dev_set, metrics, opt, ckpt.epoch + 1, iteration,
                                        progress)
        ckpt = Checkpoint(model, opt, cfg, 'phase1', cfg.phase1_epochs, iteration)
        if on_checkpoint:
            on_checkpoint(ckpt)

    if phase in ('2', 'both'):
        if ckpt.stage == 'phase1':
            ckpt = Checkpoint(model, None, cfg, 'phase2', 0, 0)
        opt, iteration = ckpt.optimizer, ckpt.iteration
        if ckpt.epoch < cfg.phase2_epochs:
            opt, iteration = run_phase2(model, cfg, train_set, dev_set, metrics, opt, ckpt.epoch + 1, iteration,
                                        progress)
        ckpt = Checkpoint(model, opt, cfg, 'phase2', cfg.phase2_epochs, iteration)
        if on_checkpoint:
            on_checkpoint(ckpt)
    return ckpt


def finetune_baseline(ckpt, lr, budget=None, metrics=None, progress=False):
    """ Continue a phase-1 student with cross-entropy only, as long as phase 2 would run

    Uses the phase-2 optimizer settings with the learning rate replaced by lr.
    The checkpoint's model is trained in place; a budget of 0 returns ckpt itself.
    """
    cfg = ckpt.config
    budget = cfg.phase2_epochs if budget is None else int(budget)
    if budget < 0:
        raise ConfigError('budget must be >= 0')
    if budget == 0:
        return ckpt
    if ckpt.stage != 'phase1' or ckpt.model.phase != 1:
        raise PhaseError('finetuning starts from a phase 1 checkpoint, got %s' % ckpt.stage)
    train_set, dev_set = _datasets(cfg)
    metrics = MetricsWriter() if metrics is None else metrics
    model = ckpt.model
    model.freeze_step_sizes()
    opt = SGD(OptimConfig(**dict(cfg.phase2_optim.to_dict(), lr=float(lr))))
    start = datetime.now()
    iteration = 0
    for epoch in range(1, budget + 1):
        losses = []
        rate = opt.lr(epoch, iteration)
        for batch in _batches(train_set, cfg, epoch, 'finetune epoch %s' % epoch, progress):
            rate = opt.lr(epoch, iteration)
            losses.append(finetune_step(model, batch, opt, rate))
            iteration += 1
        _record_epoch(metrics, model, epoch, 'finetune', iteration, dev_set, {STUDENT: _mean(losses)}, rate,
                      (1.0, 0.0))
    logger.info('Completed finetuning (%s epochs, lr=%s) in %s', budget, lr, datetime.now() - start)
    return Checkpoint(model, opt, cfg, 'finetune', budget, iteration)


def train_vanilla(cfg, metrics=None, progress=False, datasets=None):
    """ Dense full-precision training for phase1_epochs + phase2_epochs """
    train_set, dev_set = datasets or _datasets(cfg)
    metrics = MetricsWriter() if metrics is None else metrics
    model = build_from_config(cfg)
    model.set_quantization(False)
    model.freeze_step_sizes()
    opt = SGD(cfg.optim)
    epochs = cfg.phase1_epochs + cfg.phase2_epochs
    start = datetime.now()
    iteration = 0
    for epoch in range(1, epochs + 1):
        losses = []
        rate = opt.lr(epoch, iteration)
        for batch in _batches(train_set, cfg, epoch, 'vanilla epoch %s' % epoch, progress):
            rate = opt.lr(epoch, iteration)
            losses.append(vanilla_step(model, batch, opt, rate))
            iteration += 1
        _record_epoch(metrics, model, epoch, 'vanilla', iteration, dev_set, {STUDENT: _mean(losses)}, rate)
    logger.info('Completed vanilla training (%s epochs) in %s', epochs, datetime.now() - start)
    return Checkpoint(model, opt, cfg, 'vanilla', epochs, iteration)

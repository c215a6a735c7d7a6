"""Walkthrough: the training objectives and the Gumbel-Softmax relaxation.

Shows the closed-form loss values, how temperature shapes the relaxed
distribution, and that the whole objective is differentiable end to end
(autograd against central finite differences).

Run:  python demos/02_losses_and_relaxation.py     (a few seconds)
"""

import math

import torch

from ogstyle import models as M
from ogstyle import training as T
from ogstyle.corpus import EOS_ID
from ogstyle.losses import LossWeights, lm_loss, ss_loss, sup_loss

# --- closed forms ----------------------------------------------------------
pred = torch.full((1, 4), 0.25, dtype=torch.float64)
print("uniform cross-entropy over 4 classes :", float(sup_loss(pred, torch.tensor([2]))),
      "= log 4 =", math.log(4))

pi = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
q = torch.tensor([[0.9, 0.1]], dtype=torch.float64)
print("LM loss, one-hot vs [0.9, 0.1]       :", float(lm_loss(pi, q)),
      "= -log 0.9 =", -math.log(0.9))

a = torch.tensor([[1.0, 0.0], [1.0, 0.0]], dtype=torch.float64)
b = torch.tensor([[2.0, 0.0], [0.0, 3.0]], dtype=torch.float64)
print("similarity loss, cosines {1, 0}      :", float(ss_loss(a, b)), "= 0.5")

# --- temperature sweep -----------------------------------------------------
print("\nrelaxed argmax of p = [0.7, 0.2, 0.1] with zero noise:")
p = torch.tensor([0.7, 0.2, 0.1], dtype=torch.float64)
for tau in (2.0, 1.0, 0.5, 0.1, 0.01):
    soft = M.gumbel_softmax(torch.log(p), tau, noise=torch.zeros(3, dtype=torch.float64))
    print(f"  tau={tau:<5} -> {[round(float(x), 4) for x in soft]}")

# --- end-to-end differentiability ------------------------------------------
torch.manual_seed(0)
cfg = M.ModelConfig(layers=1, heads=2, dim=16, ff_dim=32, max_len=12,
                    dropout=0.0, seed=1)
model = M.init_model(cfg, 24).double()
lm = M.init_lm(cfg, 24).double()
model.eval(), lm.eval(), lm.requires_grad_(False)
w = LossWeights()
unsup = [[11, 12, 13], [14, 15]]
first = M.greedy_decode_batch(model, M.pad_batch([s + [EOS_ID] for s in unsup]))
noise = M.sample_gumbel((2, max(len(f) for f in first), 24),
                        generator=torch.Generator().manual_seed(2), dtype=torch.float64)
reps = T.encoder_sentence_reps(model, unsup)

def loss():
    total, *_ = T.joint_objective(model, lm, [[5, 6]], [[7]], unsup, first, w,
                                  noise=noise, src_reps=reps)
    return total

loss().backward()
weight = model.out_proj.weight
analytic = float(weight.grad[3, 5])
h = 1e-5
with torch.no_grad():
    weight[3, 5] += h
    f_plus = float(loss())
    weight[3, 5] -= 2 * h
    f_minus = float(loss())
    weight[3, 5] += h
fd = (f_plus - f_minus) / (2 * h)
print(f"\njoint-loss gradient check on one coordinate: autograd {analytic:.10f}"
      f" vs finite differences {fd:.10f}")

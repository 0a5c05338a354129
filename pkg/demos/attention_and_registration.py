"""One fused attention block and the registration loss on toy features.

Runs a single self+cross attention step on random features with angle
embeddings, then fits the registration projections for a few gradient
steps and prints the soft correspondence of the first point.
"""
import numpy as np

import riframe.autodiff as ad
from riframe.net import afi, angular_embedding, correspondence_map, registration_loss
from riframe.net.attention import init_branch
from riframe.net.layers import ParamStore, init_linear
from riframe.net.registration import init_projections


def main():
    rng = np.random.default_rng(0)
    b, n, c, d = 1, 6, 16, 8
    p = ParamStore()
    init_branch(p, "sa", c, d, rng, np.float64)
    init_branch(p, "ca", c, d, rng, np.float64)
    init_linear(p, "phi", c, c, rng, np.float64)
    init_projections(p, "reg", c, 8, rng, np.float64)

    f_loc = ad.Tensor(rng.standard_normal((b, n, c)))
    f_glo = ad.Tensor(rng.standard_normal((b, n, c)))
    angles = rng.uniform(0, 180, (b, n, n))
    angles = (angles + angles.transpose(0, 2, 1)) / 2
    emb_sa = angular_embedding(angles, d)
    emb_ca = angular_embedding(rng.uniform(0, 180, (b, n)), d)

    u = afi(f_loc, f_glo, p, "sa", "ca", "phi", emb_sa, emb_ca)
    print("fused features:", u.shape)

    u = ad.Tensor(u.data)
    for step in range(30):
        p.zero_grad()
        loss = registration_loss(p, "reg", u, f_loc, temperature=0.1)
        ad.backward(loss)
        for t in p.values():
            if t.grad is not None:
                t.data -= 0.1 * t.grad
        if step % 10 == 0:
            print(f"step {step:2d}  registration loss {loss.item():.4f}")

    m = correspondence_map(p, "reg", f_loc.data[0], u.data[0], temperature=0.1).data
    print("point 0 matches:", np.round(m[0], 3), "(sum", round(float(m[0].sum()), 6), ")")


if __name__ == "__main__":
    main()

"""Language-conditioned goal generator: a conditional VAE over configurations.

The encoder sees (c_f, c_i, sentence embedding) and outputs the mean and
log-variance of the latent code. The decoder sees (z, c_i, sentence
embedding) and outputs one Bernoulli probability per predicate slot. The
sentence embedding is the final state of a tanh RNN trained jointly.
"""

from __future__ import annotations

import json
import logging
import struct
import zlib
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional

import numpy as np

from . import instructions as ins
from . import nn
from . import semantics as sem

log = logging.getLogger(__name__)

MAGIC = b"CVAE"
FORMAT_VERSION = 1
DTYPE_F64 = 0
DTYPE_UTF8 = 1


class ModelFormatError(ValueError):
    pass


class FormatVersionMismatch(ModelFormatError):
    pass


class ChecksumMismatch(ModelFormatError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    hidden: int = 128
    latent: int = 27
    embed: int = 100
    beta: float = 0.6
    lr: float = 1e-3
    batch: int = 128
    epochs: int = 150
    seed: int = 0

    def __post_init__(self):
        for name in ("hidden", "latent", "embed", "batch", "epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


class CVAEModel:
    def __init__(self, hp: Hyperparams, vocab: Optional[ins.Vocabulary] = None, rng=None):
        self.hp = hp
        self.vocab = vocab or ins.vocabulary()
        self.store = nn.ParamStore()
        if rng is None:
            rng = np.random.default_rng(hp.seed)
        H, Z, D, V = hp.hidden, hp.latent, hp.embed, len(self.vocab)
        shapes = {
            "emb": (V, D),
            "rnn_Wx": (D, D), "rnn_Wh": (D, D), "rnn_b": (D,),
            "enc_W1": (2 * sem.N_SLOTS + D, H), "enc_b1": (H,),
            "enc_W2": (H, H), "enc_b2": (H,),
            "enc_Wmu": (H, Z), "enc_bmu": (Z,),
            "enc_Wlv": (H, Z), "enc_blv": (Z,),
            "dec_W1": (Z + sem.N_SLOTS + D, H), "dec_b1": (H,),
            "dec_W2": (H, H), "dec_b2": (H,),
            "dec_W3": (H, sem.N_SLOTS), "dec_b3": (sem.N_SLOTS,),
        }
        for name, shape in shapes.items():
            if len(shape) == 2:
                self.store.add(name, nn.glorot(rng, *shape))
            else:
                self.store.add(name, np.zeros(shape))
        self._token_cache: Dict[str, List[int]] = {}

    @property
    def params(self):
        return self.store.params

    @property
    def grads(self):
        return self.store.grads

    def copy(self):
        other = CVAEModel.__new__(CVAEModel)
        other.hp = self.hp
        other.vocab = self.vocab
        other.store = nn.ParamStore()
        for k, v in self.params.items():
            other.store.add(k, v.copy())
        other._token_cache = {}
        return other

    def __eq__(self, other):
        if not isinstance(other, CVAEModel):
            return NotImplemented
        return (
            self.hp == other.hp
            and self.vocab == other.vocab
            and list(self.params) == list(other.params)
            and all(
                a.shape == b.shape and a.tobytes() == b.tobytes()
                for a, b in zip(self.params.values(), other.params.values())
            )
        )

    # -- sentence embedding --------------------------------------------------

    def tokens(self, text):
        if text not in self._token_cache:
            self._token_cache[text] = self.vocab.encode(text)
        return self._token_cache[text]

    def embed(self, texts):
        tokens, lengths = nn.pad_batch([self.tokens(t) for t in texts])
        p = self.params
        return nn.rnn_encode(tokens, lengths, p["emb"], p["rnn_Wx"], p["rnn_Wh"], p["rnn_b"])

    # -- forward passes ------------------------------------------------------

    def _encoder(self, c_f, c_i, e):
        p = self.params
        x = np.concatenate([c_f, c_i, e], axis=1)
        a1, l1 = nn.linear(x, p["enc_W1"], p["enc_b1"])
        h1, r1 = nn.relu(a1)
        a2, l2 = nn.linear(h1, p["enc_W2"], p["enc_b2"])
        h2, r2 = nn.relu(a2)
        mu, lmu = nn.linear(h2, p["enc_Wmu"], p["enc_bmu"])
        lv_raw, llv = nn.linear(h2, p["enc_Wlv"], p["enc_blv"])
        lv, clamp = nn.clamp_logvar(lv_raw)
        return mu, lv, (l1, r1, l2, r2, lmu, llv, clamp)

    def _decoder(self, z, c_i, e):
        p = self.params
        x = np.concatenate([z, c_i, e], axis=1)
        a1, l1 = nn.linear(x, p["dec_W1"], p["dec_b1"])
        h1, r1 = nn.relu(a1)
        a2, l2 = nn.linear(h1, p["dec_W2"], p["dec_b2"])
        h2, r2 = nn.relu(a2)
        logits, l3 = nn.linear(h2, p["dec_W3"], p["dec_b3"])
        probs, sg = nn.sigmoid(logits)
        return probs, (l1, r1, l2, r2, l3, sg)

    def encode_batch(self, c_f, c_i, texts):
        e, _ = self.embed(texts)
        mu, lv, _ = self._encoder(_as2d(c_f), _as2d(c_i), e)
        return mu, lv

    def decode_batch(self, z, c_i, texts):
        e, _ = self.embed(texts)
        probs, _ = self._decoder(_as2d(z), _as2d(c_i), e)
        return probs

    # -- training objective --------------------------------------------------

    def loss_and_grads(self, c_f, c_i, texts, eps, beta=None):
        """Composite loss at a fixed noise draw ``eps``; fills ``self.grads``.

        Returns (total, bce, kl).
        """
        beta = self.hp.beta if beta is None else beta
        c_f, c_i = _as2d(c_f), _as2d(c_i)
        e, rnn_cache = self.embed(texts)
        mu, lv, enc_cache = self._encoder(c_f, c_i, e)
        std = np.exp(0.5 * lv)
        z = mu + std * eps
        probs, dec_cache = self._decoder(z, c_i, e)
        bce, dprobs = nn.bce_loss(probs, c_f)
        kl, dmu_kl, dlv_kl = nn.kl_loss(mu, lv)

        self.store.zero_grad()
        g = self.store.accumulate
        # decoder
        l1, r1, l2, r2, l3, sg = dec_cache
        dlogits = nn.sigmoid_backward(dprobs, sg)
        dh2, dW, db = nn.linear_backward(dlogits, l3)
        g("dec_W3", dW); g("dec_b3", db)
        dh1, dW, db = nn.linear_backward(nn.relu_backward(dh2, r2), l2)
        g("dec_W2", dW); g("dec_b2", db)
        dx, dW, db = nn.linear_backward(nn.relu_backward(dh1, r1), l1)
        g("dec_W1", dW); g("dec_b1", db)
        Z = mu.shape[1]
        dz = dx[:, :Z]
        de = dx[:, Z + sem.N_SLOTS:].copy()
        # reparameterization and KL
        dmu = dz + beta * dmu_kl
        dlv = dz * eps * 0.5 * std + beta * dlv_kl
        # encoder
        l1, r1, l2, r2, lmu, llv, clamp = enc_cache
        dlv = nn.clamp_backward(dlv, clamp)
        dh2a, dW, db = nn.linear_backward(dmu, lmu)
        g("enc_Wmu", dW); g("enc_bmu", db)
        dh2b, dW, db = nn.linear_backward(dlv, llv)
        g("enc_Wlv", dW); g("enc_blv", db)
        dh1, dW, db = nn.linear_backward(nn.relu_backward(dh2a + dh2b, r2), l2)
        g("enc_W2", dW); g("enc_b2", db)
        dx, dW, db = nn.linear_backward(nn.relu_backward(dh1, r1), l1)
        g("enc_W1", dW); g("enc_b1", db)
        de += dx[:, 2 * sem.N_SLOTS:]
        # sentence encoder
        dE, dWx, dWh, db = nn.rnn_backward(de, rnn_cache)
        g("emb", dE); g("rnn_Wx", dWx); g("rnn_Wh", dWh); g("rnn_b", db)
        return bce + beta * kl, bce, kl

    def loss(self, c_f, c_i, texts, eps, beta=None):
        beta = self.hp.beta if beta is None else beta
        c_f, c_i = _as2d(c_f), _as2d(c_i)
        e, _ = self.embed(texts)
        mu, lv, _ = self._encoder(c_f, c_i, e)
        z = mu + np.exp(0.5 * lv) * eps
        probs, _ = self._decoder(z, c_i, e)
        return nn.bce_loss(probs, c_f)[0] + beta * nn.kl_loss(mu, lv)[0]


def _as2d(x):
    x = np.asarray(x, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


def encode(model, c_f, c_i, sentence):
    mu, lv = model.encode_batch([c_f], [c_i], [_text(sentence)])
    return mu[0], lv[0]


def reparameterize(mu, logvar, rng):
    eps = rng.standard_normal(np.shape(mu))
    lv = np.clip(logvar, nn.LOGVAR_MIN, nn.LOGVAR_MAX)
    return mu + np.exp(0.5 * lv) * eps


def decode(model, z, c_i, sentence):
    return model.decode_batch([z], [c_i], [_text(sentence)])[0]


def _text(sentence):
    return sentence.text if isinstance(sentence, ins.Sentence) else sentence


def _binarize(probs):
    return [tuple(int(b) for b in row) for row in (probs > 0.5)]


def sample_goals(model, c_i, sentence, n, rng) -> List[sem.Config]:
    """n independent prior draws decoded and thresholded at 0.5."""
    if n < 1:
        raise ValueError("n must be >= 1")
    text = _text(sentence)
    e, _ = model.embed([text])
    z = rng.standard_normal((n, model.hp.latent))
    c = np.repeat(_as2d(c_i), n, axis=0)
    probs, _ = model._decoder(z, c, np.repeat(e, n, axis=0))
    return _binarize(probs)


def sample_goals_many(model, queries, n, rng, chunk=20000):
    """Batched ``sample_goals`` over (c_i, text) queries; noise is drawn per query in order."""
    texts = sorted({t for _, t in queries})
    emb, _ = model.embed(texts)
    row = {t: i for i, t in enumerate(texts)}
    z = rng.standard_normal((len(queries) * n, model.hp.latent))
    c_i = np.repeat(np.asarray([q[0] for q in queries], dtype=np.float64), n, axis=0)
    e = np.repeat(emb[[row[t] for _, t in queries]], n, axis=0)
    out = []
    for s in range(0, len(z), chunk):
        probs, _ = model._decoder(z[s:s + chunk], c_i[s:s + chunk], e[s:s + chunk])
        out.extend(_binarize(probs))
    return [out[k * n:(k + 1) * n] for k in range(len(queries))]


# ---------------------------------------------------------------------------
# training

def train(d_train, hp: Hyperparams = Hyperparams(), log_fn=None):
    """Fit a model on triplets; returns (model, per-epoch log rows)."""
    if not d_train:
        raise ValueError("empty training set")
    rng = np.random.default_rng(hp.seed)
    model = CVAEModel(hp, rng=rng)
    c_f = np.asarray([t.c_f for t in d_train], dtype=np.float64)
    c_i = np.asarray([t.c_i for t in d_train], dtype=np.float64)
    texts = [t.sentence.text for t in d_train]
    state = nn.AdamState.for_params(model.params, lr=hp.lr)
    history = []
    n = len(d_train)
    for epoch in range(1, hp.epochs + 1):
        order = rng.permutation(n)
        sums = np.zeros(3)
        n_batches = 0
        for s in range(0, n, hp.batch):
            idx = order[s:s + hp.batch]
            eps = rng.standard_normal((len(idx), hp.latent))
            total, bce, kl = model.loss_and_grads(c_f[idx], c_i[idx], [texts[i] for i in idx], eps)
            nn.adam_step(model.params, model.grads, state)
            sums += (bce, kl, total)
            n_batches += 1
        mean_bce, mean_kl, mean_total = sums / n_batches
        row = {"epoch": epoch, "mean_bce": float(mean_bce), "mean_kl": float(mean_kl),
               "mean_total": float(mean_total)}
        history.append(row)
        if log_fn is not None:
            log_fn(row)
        log.debug("epoch %d total %.4f", epoch, mean_total)
    return model, history


# ---------------------------------------------------------------------------
# persistence

def _section(name, tag, shape, data: bytes):
    raw = name.encode("utf-8")
    head = struct.pack("<H", len(raw)) + raw + struct.pack("<BB", tag, len(shape))
    head += struct.pack(f"<{len(shape)}I", *shape)
    return head + data


def to_bytes(model: CVAEModel) -> bytes:
    meta = json.dumps({"hyperparams": asdict(model.hp), "vocab": model.vocab.words},
                      sort_keys=True).encode("utf-8")
    sections = [_section("__meta__", DTYPE_UTF8, (len(meta),), meta)]
    for name, p in model.params.items():
        sections.append(_section(name, DTYPE_F64, p.shape, p.astype("<f8").tobytes()))
    payload = struct.pack("<I", len(sections)) + b"".join(sections)
    return MAGIC + struct.pack("<BI", FORMAT_VERSION, zlib.crc32(payload)) + payload


def from_bytes(blob: bytes) -> CVAEModel:
    if len(blob) < 9 or blob[:4] != MAGIC:
        raise ModelFormatError("not a CVAE weight file")
    version, crc = struct.unpack_from("<BI", blob, 4)
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(f"unsupported format version {version}")
    payload = blob[9:]
    if zlib.crc32(payload) != crc:
        raise ChecksumMismatch("weight file checksum mismatch")
    (n_sections,) = struct.unpack_from("<I", payload, 0)
    pos = 4
    meta = None
    arrays = {}
    for _ in range(n_sections):
        (name_len,) = struct.unpack_from("<H", payload, pos)
        pos += 2
        name = payload[pos:pos + name_len].decode("utf-8")
        pos += name_len
        tag, rank = struct.unpack_from("<BB", payload, pos)
        pos += 2
        shape = struct.unpack_from(f"<{rank}I", payload, pos)
        pos += 4 * rank
        if tag == DTYPE_UTF8:
            meta = json.loads(payload[pos:pos + shape[0]].decode("utf-8"))
            pos += shape[0]
        elif tag == DTYPE_F64:
            count = int(np.prod(shape, dtype=np.int64))
            arrays[name] = np.frombuffer(payload, dtype="<f8", count=count, offset=pos).reshape(shape).copy()
            pos += 8 * count
        else:
            raise ModelFormatError(f"unknown dtype tag {tag} in section {name!r}")
    if meta is None:
        raise ModelFormatError("missing metadata section")
    model = CVAEModel.__new__(CVAEModel)
    model.hp = Hyperparams(**meta["hyperparams"])
    model.vocab = ins.Vocabulary(meta["vocab"])
    model.store = nn.ParamStore()
    for name, a in arrays.items():
        model.store.add(name, a.astype(np.float64))
    model._token_cache = {}
    return model


def save(model: CVAEModel, path):
    with open(path, "wb") as f:
        f.write(to_bytes(model))


def load(path) -> CVAEModel:
    with open(path, "rb") as f:
        return from_bytes(f.read())

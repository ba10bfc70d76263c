"""Build a small pre-trained text encoder from unlabeled corpus text.

There is no model hub in the loop: the builder constructs a WordPiece
tokenizer over the corpus vocabulary and pre-trains a small BERT with
two self-supervised objectives -- masked-token prediction and a pooled
bag-of-words reconstruction. The second one forces the pooled [CLS]
vector to expose token content linearly, which is what lets a short
fine-tune at BERT-scale learning rates move the loss. The result is
saved in standard `save_pretrained` layout and loads with
`from_pretrained(path)` like any published checkpoint.
"""

from pathlib import Path

import torch
from tokenizers import Tokenizer
from tokenizers.models import WordPiece
from tokenizers.normalizers import BertNormalizer
from tokenizers.pre_tokenizers import BertPreTokenizer
from tokenizers.processors import BertProcessing
from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]

DEFAULT_HIDDEN = 512
DEFAULT_LAYERS = 2
DEFAULT_HEADS = 4
DEFAULT_PRETRAIN_STEPS = 1500
DEFAULT_PRETRAIN_LR = 5e-4
DEFAULT_MAX_LENGTH = 96


def build_tokenizer(texts: list[str], out_dir: Path) -> BertTokenizerFast:
    """WordPiece tokenizer whose vocabulary covers the corpus exactly."""
    probe = Tokenizer(WordPiece({s: i for i, s in enumerate(SPECIALS)}, unk_token="[UNK]"))
    probe.normalizer = BertNormalizer(lowercase=True)
    probe.pre_tokenizer = BertPreTokenizer()
    seen: dict[str, None] = {}
    for text in texts:
        for piece, _ in probe.pre_tokenizer.pre_tokenize_str(probe.normalizer.normalize_str(text)):
            seen.setdefault(piece, None)
    vocab = {w: i for i, w in enumerate(SPECIALS + sorted(seen))}

    wp = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    wp.normalizer = BertNormalizer(lowercase=True)
    wp.pre_tokenizer = BertPreTokenizer()
    wp.post_processor = BertProcessing(("[SEP]", vocab["[SEP]"]), ("[CLS]", vocab["[CLS]"]))
    out_dir.mkdir(parents=True, exist_ok=True)
    wp.save(str(out_dir / "tokenizer.json"))
    tokenizer = BertTokenizerFast(
        tokenizer_file=str(out_dir / "tokenizer.json"),
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]",
        model_max_length=DEFAULT_MAX_LENGTH,
    )
    tokenizer.save_pretrained(out_dir)
    return tokenizer


class _PretrainNet(torch.nn.Module):
    """Masked-LM trunk plus a pooled bag-of-words head."""

    def __init__(self, config: BertConfig):
        super().__init__()
        self.mlm = BertForMaskedLM(config)
        self.pooler_dense = torch.nn.Linear(config.hidden_size, config.hidden_size)
        self.bow_head = torch.nn.Linear(config.hidden_size, config.vocab_size)

    def forward(self, input_ids, attention_mask, mlm_labels):
        out = self.mlm(
            input_ids=input_ids,
            attention_mask=attention_mask,
            labels=mlm_labels,
            output_hidden_states=True,
        )
        pooled = torch.tanh(self.pooler_dense(out.hidden_states[-1][:, 0]))
        return out.loss, self.bow_head(pooled)


def pretrain_encoder(
    texts: list[str],
    out_dir,
    hidden_size: int = DEFAULT_HIDDEN,
    num_layers: int = DEFAULT_LAYERS,
    steps: int = DEFAULT_PRETRAIN_STEPS,
    lr: float = DEFAULT_PRETRAIN_LR,
    batch_size: int = 8,
    mask_rate: float = 0.15,
    bow_weight: float = 2.0,
    seed: int = 0,
) -> Path:
    """Pre-train a tiny encoder on the given texts and save it.

    Labels are never seen here; both objectives are self-supervised.
    """
    if not texts:
        raise ValueError("no texts to pre-train on")
    out_dir = Path(out_dir)
    tokenizer = build_tokenizer(texts, out_dir)

    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=DEFAULT_HEADS,
        intermediate_size=2 * hidden_size,
        max_position_embeddings=128,
        hidden_dropout_prob=0.05,
        attention_probs_dropout_prob=0.05,
    )
    torch.manual_seed(seed)
    net = _PretrainNet(config)
    opt = torch.optim.AdamW(net.parameters(), lr=lr)

    enc = tokenizer(texts, return_tensors="pt", padding=True, truncation=True,
                    max_length=DEFAULT_MAX_LENGTH)
    ids, attn = enc["input_ids"], enc["attention_mask"]
    n, vocab_size = ids.shape[0], config.vocab_size
    bow = torch.zeros(n, vocab_size)
    for i in range(n):
        bow[i, ids[i][attn[i] == 1]] = 1.0

    bce = torch.nn.BCEWithLogitsLoss()
    g = torch.Generator().manual_seed(seed)
    net.train()
    for _ in range(steps):
        idx = torch.randint(0, n, (batch_size,), generator=g)
        batch_ids = ids[idx].clone()
        batch_attn = attn[idx]
        mask = (torch.rand(batch_ids.shape, generator=g) < mask_rate) & (batch_attn == 1)
        mlm_labels = torch.where(mask, batch_ids, torch.tensor(-100))
        batch_ids[mask] = tokenizer.mask_token_id
        mlm_loss, bow_logits = net(batch_ids, batch_attn, mlm_labels)
        loss = mlm_loss + bow_weight * bce(bow_logits, bow[idx])
        opt.zero_grad()
        loss.backward()
        opt.step()

    # the MLM trunk has no pooler; persist through a pooled BertModel so
    # downstream classification heads inherit the trained pooler weights
    from transformers import BertModel

    bert = BertModel(config)
    bert.load_state_dict(net.mlm.bert.state_dict(), strict=False)
    bert.pooler.dense.load_state_dict(net.pooler_dense.state_dict())
    bert.save_pretrained(out_dir)
    return out_dir

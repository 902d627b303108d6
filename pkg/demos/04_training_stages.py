"""A miniature three-stage curriculum, end to end.

Stage 1 trains only the bridge (tokenizer head + visual table) and the
encoder's re-initialized last block on captions; stage 2 unfreezes the whole
encoder on descriptions; stage 3 trains everything on instruction answers.
Runs a scaled-down config so the whole demo takes well under a minute.
"""

from ovis_toy import vocab
from ovis_toy.config import ToyConfig
from ovis_toy.data import generate_records, record_to_sample, split_holdout
from ovis_toy.llm import generate_greedy
from ovis_toy.model import build_model
from ovis_toy.training import build_stage, token_accuracy, train_stage

cfg = ToyConfig(stage1_steps=40, stage2_steps=40, stage3_steps=80, batch_size=8)
data = {k: generate_records(0, k, 60) for k in ("caption", "description", "instruction")}

model = build_model("ovis", cfg, seed=0)
for stage in (1, 2, 3):
    scfg = build_stage(stage, cfg)
    train, held = split_holdout(data[scfg.dataset_kind], cfg.holdout_every)
    result = train_stage(model, scfg, train, seed=0)
    acc = token_accuracy(model, held)
    frozen = "none" if stage == 3 else ("LLM + most of encoder" if stage == 1 else "LLM")
    print(f"stage {stage} ({scfg.dataset_kind}s, frozen: {frozen}): "
          f"loss {result.losses[0]:.3f} -> {result.losses[-1]:.3f}, held-out acc {acc:.3f}")

rec = split_holdout(data["instruction"], cfg.holdout_every)[1][0]
sample = record_to_sample(rec)
prompt_only = type(sample)(prompt_ids=sample.prompt_ids, target_ids=[], image=sample.image)
out = generate_greedy(model.llm, model.assemble_sample(prompt_only), model.ttable, max_new=6)
print(f"\nheld-out prompt: {rec.prompt!r}")
print(f"expected answer: {rec.target!r}")
print(f"greedy output:   {vocab.decode([t for t in out if t != vocab.EOS_ID])!r}"
      "  (a short run like this may still miss)")

"""
Training the two tabular learners
=================================

Both learners act through the Gym-style environment.  The Q-learner keeps
a replay buffer and a periodically synced target table; PPO keeps per-state
logits and a value baseline and optimizes the clipped surrogate.

The budgets match the acceptance suite; the script takes about a minute.
"""

from rivetline.agents import GreedyPolicy, PPOConfig, evaluate, train
from rivetline.env import make_env

SEED = 0

q_agent, q_log = train("qlearn", make_env(1), episodes=5000, seed=SEED)

# With the shipped defaults PPO tends to settle on delivering products
# straight away without rivets.  A larger step size and entropy bonus get
# past that.
ppo_agent, ppo_log = train("ppo", make_env(1), episodes=10**9, seed=SEED,
                           config=PPOConfig(learning_rate=2.0, entropy_coeff=0.4), total_steps=2000 * 512)

print("learner  episodes  allCorrect  meanReturn  meanSteps")
for name, agent, log in (("qlearn", q_agent, q_log), ("ppo", ppo_agent, ppo_log)):
    stats = evaluate(GreedyPolicy.from_agent(agent), make_env(1), 200, seed=12345)
    print(f"{name:<8} {len(log):>8}  {stats.all_correct_rate:>10.3f}  {stats.mean_return:>10.2f}  "
          f"{stats.mean_steps:>9.2f}")

# The learning curve is in the train log, one record per episode.
tail = q_log[-200:]
print("Q-learner, last 200 training episodes all-correct:", sum(r.all_correct for r in tail) / len(tail))

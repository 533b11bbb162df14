"""The two epoch-dependent weights of the cluster-shaping loss.

alpha decays exponentially from 1 + alpha0 toward 1 (compactness pressure
relaxes); beta decays linearly and hits its 1e-8 floor after the first 20%
of the training horizon (separation pressure ramps up as the rival
exponents shrink).
"""

from latentboost import ScheduleState, alpha_schedule, beta_schedule

TOTAL = 100
print(f"{'epoch':>6}{'alpha':>12}{'beta':>14}")
for epoch in (0, 5, 10, 15, 19, 20, 25, 50, 75, 100):
    s = ScheduleState(alpha0=1.0, beta0=1.0, epoch=epoch, total_epochs=TOTAL)
    print(f"{epoch:>6}{alpha_schedule(s):>12.6f}{beta_schedule(s):>14.2e}")

print("""
reading the table:
  - alpha(0) = 1 + alpha0, then strictly decreasing, floor at 1
  - beta(0) = beta0, linear to the 1e-8 floor at epoch 0.2 * total
""")

# alpha0 = 0 switches the compactness schedule off entirely
flat = [alpha_schedule(ScheduleState(alpha0=0.0, epoch=e, total_epochs=TOTAL))
        for e in range(0, TOTAL + 1, 20)]
print("alpha with alpha0=0:", flat)

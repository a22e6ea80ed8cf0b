"""Equal loss on every mode commutes with any interferometer; unequal loss
does not.  The first fact is the lemma that powers every bound in this
package, the second shows the test would notice if it were false."""

import pel

worst = pel.verify_commutation(seed=42, trials=50, cutoff=6)
print("50 random trials (2-4 modes, mixed sources, p in [0.3, 0.95]):")
print("  max trace distance between loss-then-U and U-then-loss:", worst)

probe = pel.unequal_loss_counterexample(p1=0.4, p2=0.9)
print()
print("same comparison with unequal loss (0.4 vs 0.9) on a balanced coupler:")
print("  trace distance:", round(probe, 6), "- macroscopic, as it should be")

equal = pel.unequal_loss_counterexample(p1=0.7, p2=0.7)
print("and back to equal loss (0.7 vs 0.7):", equal)

"""
Auditing a restaurant log
=========================

Selling alcohol is permitted to a restaurant, and while alcohol may be sold
the licence must be on display. Failing that, a fine repairs the breach.
We replay a recorded day of events against these rules.
"""

from fclcheck import LifecycleConfig, parse_rules, replay_log
from fclcheck.compliance import parse_log, trace_result_to_text

rules = parse_rules("""
r0: restaurant => [P]sell_alcohol
r2: restaurant, [P]sell_alcohol => [OM]show_license (x) [OAPNP]pay_fine
""", name="restaurant")

# one event per line: event id ; literals the event makes true
good_day = parse_log("""
open ; restaurant, show_license
serve ; drinks
close ; closed
""")
bad_day = parse_log("""
open ; restaurant
serve ; drinks
inspect ; pay_fine
""")

for name, log in (("good day", good_day), ("bad day", bad_day)):
    result = replay_log(log, rules)
    print(name)
    print(trace_result_to_text(result))

# the bad day breaches the licence obligation at every event, but the fine
# compensates it: weakly compliant, not strongly
result = replay_log(bad_day, rules)
print("strong:", result.strongly_compliant, "weak:", result.weakly_compliant)

# a stricter reading: a compensation that was itself repaired no longer
# counts. Here the fine was paid outright, so the verdict does not change.
result = replay_log(bad_day, rules, LifecycleConfig(strict_compensation=True))
print("strict weak:", result.weakly_compliant)

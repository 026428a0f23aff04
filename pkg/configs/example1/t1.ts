# Three-state concrete system.  The x0/x1 rows are pinned by the worked
# checks in the regression suite; x2's b-action is deliberately absent.
states x0 x1 x2
actions a b
props Initial Goal
x0 a x0
x0 b x2
x1 a x2
x1 b x1
x2 a x2
x0 : Initial
x1 : Initial
x2 : Goal

"""Fixture corpus for the numeric reply parser: 30 cases with exact outcomes.

Each entry is (raw_text, horizon, expected) where expected is either the
exact list of parsed floats or the exception type the parser must raise.
Several cases pin deliberately surprising-but-contractual behavior (prose
numerals count, scientific notation splits, first-H truncation).
"""

from tokon.errors import NoNumbers, TooFewNumbers

PARSER_CORPUS = [
    # clean lists
    ("512, 498, 530", 3, [512.0, 498.0, 530.0]),
    ("512,498,530", 3, [512.0, 498.0, 530.0]),
    ("  7  ", 1, [7.0]),
    ("0.5\n0.6\n0.7", 3, [0.5, 0.6, 0.7]),
    ("values=(1.0; 2.0; 3.0)", 3, [1.0, 2.0, 3.0]),
    ("3.14159", 1, [3.14159]),
    ("999999999999.123456", 1, [999999999999.123456]),
    # signs
    ("-5, -6, -7", 3, [-5.0, -6.0, -7.0]),
    ("+5, +6", 2, [5.0, 6.0]),
    ("Answer: -0.5", 1, [-0.5]),
    # bracketed lists
    ("Predicted values: [512, 498, 530, 541]", 3, [512.0, 498.0, 530.0]),
    ("[1.5, 2.5, 3.5]", 3, [1.5, 2.5, 3.5]),
    ("[[512], [498]]", 2, [512.0, 498.0]),
    # prose-wrapped
    ("The series continues: 1000.0, 1032.0, 1100.0, 1197.0", 4, [1000.0, 1032.0, 1100.0, 1197.0]),
    ("I predict 512 then 498 then 530", 3, [512.0, 498.0, 530.0]),
    ("answer: 42", 1, [42.0]),
    ("approximately 12.5, maybe 13, possibly 13.5", 3, [12.5, 13.0, 13.5]),
    # prose numerals count toward the first-H rule
    ("The next 3 measurements are 10.1, 10.2 and 10.3.", 3, [3.0, 10.1, 10.2]),
    ("step 1: 500\nstep 2: 510", 2, [1.0, 500.0]),
    # odd shapes that the maximal-substring rule pins down
    ("1e5", 1, [1.0]),
    ("1.", 1, [1.0]),
    (".5", 1, [5.0]),
    ("12.3.4", 2, [12.3, 4.0]),
    ("2ue 45x9 zz", 2, [2.0, 45.0]),
    # refusals / no numbers
    ("I cannot forecast this.", 3, NoNumbers),
    ("", 1, NoNumbers),
    ("Sorry, as a language model I am unable to help with that.", 2, NoNumbers),
    ("NaN, NaN, NaN", 3, NoNumbers),
    # too few numbers
    ("500", 3, TooFewNumbers),
    ("1, 2", 3, TooFewNumbers),
]

assert len(PARSER_CORPUS) == 30

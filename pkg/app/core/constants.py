# Exit codes shared by the CLI and the HTTP error mapping
EXIT_OK = 0
EXIT_PARSE = 1
EXIT_SEMANTIC = 2
EXIT_CAP = 3

# Default resource caps
DEFAULT_CAP_ORACLE = 10_000_000
DEFAULT_CAP_UNFOLD = 5_000
DEFAULT_CAP_CYCLES = 10_000
DEFAULT_CAP_SEARCH = 16
DEFAULT_CAP_RSPR = 200_000

# Tie-break policies for the top-down phase
TIE_FIRST = "first"
TIE_SEEDED = "seeded"
TIE_POLICIES = (TIE_FIRST, TIE_SEEDED)

# Output formats
FORMAT_DOT = "dot"
FORMAT_JSON = "json"
FORMAT_TSV = "tsv"
OUTPUT_FORMATS = (FORMAT_DOT, FORMAT_JSON, FORMAT_TSV)

# Network arc kinds (edge attribute "kind")
ARC_FOREST = "forest"
ARC_CONTACT = "contact"

STABILITY_CSV_HEADER = (
    "trial", "k", "d_rspr", "t_before", "t_after",
    "bound_spr", "bound_fk_r", "bound_fk_n", "violated",
)

# Exact rSPR distance is only attempted up to this many leaves
RSPR_MAX_LEAVES = 8

# Label prefix of gene leaves added by trail normalization
AUGMENT_LEAF_PREFIX = "aug"

#include <anyk/dpgraph.hpp>

// Header-only templates; this unit just keeps the header self-contained.

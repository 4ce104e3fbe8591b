#pragma once

#define AGGDIFF_VERSION "0.1.0"

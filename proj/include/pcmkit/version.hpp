#pragma once

#define PCMKIT_VERSION_MAJOR 0
#define PCMKIT_VERSION_MINOR 1
#define PCMKIT_VERSION_PATCH 0
#define PCMKIT_VERSION "0.1.0"

#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "fedprov/log.hpp"

int main(int argc, char** argv) {
  // Degenerate fixtures trigger expected warnings; keep the output readable.
  fedprov::log::set_level(fedprov::log::Level::kError);
  doctest::Context context(argc, argv);
  return context.run();
}

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <iostream>

#include "insight/catalog/engine.hpp"

// Every suite also checks that no statement was ever refused by a read-only
// guard while it ran.
int main(int argc, char** argv) {
  doctest::Context context(argc, argv);
  int rc = context.run();
  if (context.shouldExit()) return rc;
  auto attempts = insight::catalog::MutationCounter::global().attempts();
  if (attempts != 0) {
    std::cerr << "read-only guard rejected " << attempts << " statement(s) during the run\n";
    return rc ? rc : 1;
  }
  return rc;
}

#include "quadlab/common.hpp"

#include "CLI11.hpp"

#include <cstdio>

int main(int argc, char** argv) {
  CLI::App app{"quadlab: energy-optimal quadrotor flight laboratory"};
  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);
  return 0;
}

#include "bct/report.hpp"

int main(int argc, char** argv) { return bct::run_cli(argc, argv); }

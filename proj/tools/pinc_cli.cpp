#include "pinc/config.hpp"
#include "pinc/eval.hpp"
int main(){return 0;}

#include <cstdio>
int main(){ std::puts("oscone"); return 0; }

// placeholder main for the acceptance binary while modules build
int main(){return 0;}

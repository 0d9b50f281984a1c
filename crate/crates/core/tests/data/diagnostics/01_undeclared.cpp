int main(){return x;}

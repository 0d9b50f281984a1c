int (**init_proc())(void)
{
  int (**result)(void); // rax

  result = &_gmon_start__;
  if ( &_gmon_start__ )
    return (int (**)(void))_gmon_start__();
  return result;
}

int main(int argc, const char **argv, const char **envp)
{
  int n; // [rsp+0h] [rbp-20h] BYREF
  int x; // [rsp+4h] [rbp-1Ch] BYREF
  int i; // [rsp+8h] [rbp-18h]
  long long sum; // [rsp+10h] [rbp-10h]

  sum = 0LL;
  scanf("%d", &n);
  for ( i = 0; i < n; ++i )
  {
    scanf("%d", &x);
    sum += x;
  }
  printf("%lld\n", sum);
  return 0;
}

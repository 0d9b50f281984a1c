__int64 __fastcall solve(int a1)
{
  __int64 v2; // [rsp+Ch] [rbp-Ch]
  int i; // [rsp+14h] [rbp-4h]

  v2 = 1LL;
  for ( i = 2; i <= a1; ++i )
    v2 = v2 * i % 1000000007;
  return v2;
}

int __fastcall main(int argc, const char **argv, const char **envp)
{
  int v4; // [rsp+4h] [rbp-Ch] BYREF

  scanf("%d", &v4);
  printf("%lld\n", solve(v4));
  return 0;
}

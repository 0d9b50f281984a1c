__int64 __fastcall is_prime(int a1)
{
  int i; // [rsp+Ch] [rbp-4h]

  if ( a1 <= 1 )
    return 0LL;
  for ( i = 2; i * i <= a1; ++i )
  {
    if ( !(a1 % i) )
      return 0LL;
  }
  return 1LL;
}

int __fastcall main(int argc, const char **argv, const char **envp)
{
  int v4; // [rsp+0h] [rbp-10h] BYREF
  const char *v5; // rax

  scanf("%d", &v4);
  if ( (unsigned __int8)is_prime(v4) )
    v5 = "YES";
  else
    v5 = "NO";
  puts(v5);
  return 0;
}
